use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing::{error, info, Level};

use lamper::config::validate_config;
use lamper::dataset::list_datasets;
use lamper::embedding::{mock_token_count, EmbeddingBackend, HttpBackend, RetryPolicy};
use lamper::features::{extract_features, format_significant};
use lamper::prompt::{build_ddp, build_fp, build_sdp, PromptKind, RenderConfig, SubPrompt};
use lamper::run::{run_benchmark, SUMMARY_FILE};
use lamper::stats::{read_per_dataset_csv, render_cd_diagram, write_summary_csv, RankReport};

#[derive(Parser)]
#[command(name = "lamper", version, about = "Prompt-embedding time-series classification benchmark")]
struct Cli {
    /// Only log warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the statistical features of a series as `name,value` rows.
    Features { file: PathBuf },
    /// Render the prompts for a series, one per line, each ended by U+001E.
    Render {
        #[arg(long)]
        kind: PromptKind,
        #[arg(long, default_value_t = 4)]
        precision: u8,
        /// Token budget per prompt. Defaults to the backend limit, or 512.
        #[arg(long)]
        budget: Option<usize>,
        /// Count tokens with a remote backend instead of the mock tokenizer.
        #[arg(long)]
        endpoint: Option<String>,
        file: PathBuf,
    },
    /// List dataset directories under a root.
    List {
        #[arg(long)]
        root: PathBuf,
    },
    /// Recompute ranks and the critical difference from a per_dataset.csv.
    Cd {
        #[arg(long)]
        summary: PathBuf,
        /// Also write a CD diagram here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

/// Failure with an exit status: 1 for run-level failures, 2 for bad input.
struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8) -> impl Fn(String) -> Failure {
    move |message| Failure { code, message }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .json()
        .with_writer(io::stderr)
        .with_max_level(if cli.quiet { Level::WARN } else { Level::INFO })
        .init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            error!(reason = %f.message, exit_code = f.code, "lamper failed");
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config } => run(&config),
        Command::Features { file } => {
            let values = read_series(&file)?;
            let features = extract_features(&values).map_err(|e| fail(2)(e.to_string()))?;
            let mut out = String::new();
            for (name, value) in features.entries() {
                out.push_str(&format!("{name},{}\n", format_significant(value, 6)));
            }
            print(&out)
        }
        Command::Render { kind, precision, budget, endpoint, file } => {
            let values = read_series(&file)?;
            let cfg = RenderConfig { precision, ..RenderConfig::default() };
            let prompts = match endpoint {
                Some(url) => {
                    let backend = HttpBackend::connect(&url, RetryPolicy::default(), 16)
                        .map_err(|e| fail(1)(e.to_string()))?;
                    let budget = budget.unwrap_or(backend.info().max_tokens);
                    render(&values, kind, &cfg, budget, &backend)
                }
                None => render(&values, kind, &cfg, budget.unwrap_or(512), &mock_token_count),
            }?;
            let out: String = prompts.iter().map(|p| format!("{}\u{1e}\n", p.text)).collect();
            print(&out)
        }
        Command::List { root } => {
            let names = list_datasets(&root).map_err(|e| fail(2)(e.to_string()))?;
            print(&names.iter().map(|n| format!("{n}\n")).collect::<String>())
        }
        Command::Cd { summary, svg } => {
            let file = fs::File::open(&summary).map_err(|e| fail(2)(format!("{}: {e}", summary.display())))?;
            let matrix = read_per_dataset_csv(file).map_err(|e| fail(2)(format!("{}: {e}", summary.display())))?;
            let report = RankReport::from_matrix(&matrix).map_err(|e| fail(1)(e.to_string()))?;
            if let Some(path) = svg {
                fs::write(&path, render_cd_diagram(&report)).map_err(|e| fail(1)(format!("{}: {e}", path.display())))?;
            }
            let mut buf = Vec::new();
            write_summary_csv(&report, None, &mut buf).map_err(|e| fail(1)(e.to_string()))?;
            print(&String::from_utf8_lossy(&buf))
        }
    }
}

fn run(config: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(config).map_err(|e| fail(2)(format!("{}: {e}", config.display())))?;
    let mut cfg = validate_config(&text).map_err(|e| fail(2)(format!("{}: {e}", config.display())))?;
    cfg.resolve_paths(config.parent().unwrap_or(Path::new(".")));
    let outcome = run_benchmark(&cfg).map_err(|e| Failure { code: e.exit_code() as u8, message: e.to_string() })?;
    info!(
        summary = %cfg.output_dir.join(SUMMARY_FILE).display(),
        methods = outcome.methods.len(),
        ranked_datasets = outcome.report.ranked_datasets,
        "reports written"
    );
    Ok(())
}

fn render<C: lamper::TokenCounter + ?Sized>(
    values: &[f64],
    kind: PromptKind,
    cfg: &RenderConfig,
    budget: usize,
    counter: &C,
) -> Result<Vec<SubPrompt>, Failure> {
    let prompts = match kind {
        PromptKind::Sdp => build_sdp(values, cfg, budget, counter),
        PromptKind::Ddp => build_ddp(values, cfg, budget, counter),
        PromptKind::Fp => {
            let features = extract_features(values).map_err(|e| fail(2)(e.to_string()))?;
            build_fp(&features, cfg, budget, counter)
        }
    };
    prompts.map_err(|e| fail(1)(e.to_string()))
}

/// A series file holds numbers separated by commas or whitespace.
fn read_series(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| fail(2)(format!("{}: {e}", path.display())))?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| fail(2)(format!("{}: {t:?} is not a number", path.display()))))
        .collect()
}

fn print(text: &str) -> Result<(), Failure> {
    io::stdout().lock().write_all(text.as_bytes()).map_err(|e| fail(1)(e.to_string()))
}
