//! End-to-end benchmark: embed every series, fit one SVM per method and
//! dataset, then rank the methods and write the report files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;
use tracing::{info, warn};

use crate::config::{BackendSpec, ConfigError, MethodSource, MethodSpec, RunConfig};
use crate::dataset::{list_datasets, load_dataset_with, DatasetError, LoadOptions, TimeSeriesDataset};
use crate::embedding::{
    fuse, BackendError, CacheStats, DiskCache, EmbedError, Embedding, EmbeddingBackend, EmbeddingStore, HttpBackend,
    MockBackend, SeriesEmbedder, SeriesRef, Split,
};
use crate::prompt::PromptKind;
use crate::stats::{render_cd_diagram, write_per_dataset_csv, write_summary_csv, AccuracyMatrix, RankReport, StatsError};
use crate::svm::{evaluate, train_multiclass, SvmConfig};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const PER_DATASET_FILE: &str = "per_dataset.csv";
pub const ABLATION_FILE: &str = "ablation.csv";
pub const DIAGRAM_FILE: &str = "cd_diagram.svg";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("dataset root: {0}")]
    Datasets(#[from] DatasetError),
    #[error("no datasets selected under {0}")]
    NoDatasets(PathBuf),
    #[error("statistics: {0}")]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl RunError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub matrix: AccuracyMatrix,
    pub report: RankReport,
    pub methods: Vec<MethodSpec>,
    pub cache: CacheStats,
    /// Files written, in write order.
    pub files: Vec<PathBuf>,
}

/// Builds the backend described by `spec`. HTTP backends are probed once.
pub fn connect_backend(spec: &BackendSpec) -> Result<Box<dyn EmbeddingBackend>, RunError> {
    Ok(match spec {
        BackendSpec::Mock { dimension, seed, max_tokens } => {
            Box::new(MockBackend::with_max_tokens(*dimension, *seed, *max_tokens))
        }
        BackendSpec::Http { endpoint, batch_size, retry } => {
            Box::new(HttpBackend::connect(endpoint, *retry, *batch_size)?)
        }
    })
}

pub fn run_benchmark(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let backend = connect_backend(&config.backend)?;
    run_benchmark_with(config, backend.as_ref())
}

/// Same as [`run_benchmark`] against a caller-supplied backend.
pub fn run_benchmark_with(config: &RunConfig, backend: &dyn EmbeddingBackend) -> Result<RunOutcome, RunError> {
    let datasets = select_datasets(config)?;
    let methods = config.methods();
    let backend_info = backend.info();
    info!(
        model = %backend_info.model_name,
        max_tokens = backend_info.max_tokens,
        datasets = datasets.len(),
        methods = methods.len(),
        "starting run"
    );

    let cache = match &config.cache_dir {
        Some(dir) => Some(DiskCache::open(dir).map_err(io_err(dir))?),
        None => None,
    };
    let embedder = SeriesEmbedder::new(
        backend,
        cache.as_ref().map(|c| c as &dyn EmbeddingStore),
        config.embed.clone(),
    );

    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.concurrency).build()?;
    let columns: Vec<Vec<Option<f64>>> = pool.install(|| {
        datasets
            .par_iter()
            .map(|name| run_dataset(config, &methods, &embedder, name))
            .collect::<Result<_, _>>()
    })?;

    let cells: Vec<Vec<Option<f64>>> =
        (0..methods.len()).map(|m| columns.iter().map(|col| col[m]).collect()).collect();
    let names: Vec<String> = methods.iter().map(|m| m.name.clone()).collect();
    let matrix = AccuracyMatrix::new(names, datasets, cells)?;
    let report = RankReport::from_matrix(&matrix)?;
    let files = write_reports(&config.output_dir, &matrix, &report, &methods)?;
    let cache = embedder.stats();
    info!(hits = cache.hits, misses = cache.misses, ranked_datasets = report.ranked_datasets, "run finished");
    Ok(RunOutcome { matrix, report, methods, cache, files })
}

fn select_datasets(config: &RunConfig) -> Result<Vec<String>, RunError> {
    let available = list_datasets(&config.dataset_root)?;
    let selected = match &config.dataset_filter {
        None => available,
        Some(filter) => {
            if let Some(missing) = filter.iter().find(|f| !available.contains(f)) {
                return Err(ConfigError {
                    line: None,
                    message: format!("data.filter names {missing:?}, which is not under {}", config.dataset_root.display()),
                }
                .into());
            }
            available.into_iter().filter(|d| filter.contains(d)).collect()
        }
    };
    if selected.is_empty() {
        return Err(RunError::NoDatasets(config.dataset_root.clone()));
    }
    Ok(selected)
}

/// Per-split embeddings of one prompt kind.
struct KindEmbeddings {
    train: Vec<Embedding>,
    test: Vec<Embedding>,
}

/// Accuracy of every method on one dataset; `None` marks a skipped cell.
/// Only backend failures escape; anything else masks the affected cells.
fn run_dataset(
    config: &RunConfig,
    methods: &[MethodSpec],
    embedder: &SeriesEmbedder<'_>,
    name: &str,
) -> Result<Vec<Option<f64>>, RunError> {
    let options = LoadOptions { z_normalize: config.z_normalize };
    let data = match load_dataset_with(&config.dataset_root, name, options) {
        Ok(d) => d,
        Err(e) => {
            warn!(dataset = name, error = %e, "dataset skipped");
            return Ok(vec![None; methods.len()]);
        }
    };
    info!(dataset = name, train = data.train.len(), test = data.test.len(), classes = data.class_count, "dataset loaded");

    let mut kinds: Vec<(PromptKind, Option<KindEmbeddings>)> = Vec::new();
    for kind in config.required_kinds() {
        match embed_dataset(embedder, &data, kind) {
            Ok(e) => kinds.push((kind, Some(e))),
            Err(EmbedError::Backend(e)) => return Err(e.into()),
            Err(e) => {
                warn!(dataset = name, kind = kind.as_str(), error = %e, "embedding failed");
                kinds.push((kind, None));
            }
        }
    }
    let lookup = |k: PromptKind| kinds.iter().find(|(kk, _)| *kk == k).and_then(|(_, e)| e.as_ref());

    let train_labels: Vec<i64> = data.train.iter().map(|s| s.label).collect();
    let test_labels: Vec<i64> = data.test.iter().map(|s| s.label).collect();
    let mut out = Vec::with_capacity(methods.len());
    for method in methods {
        let features = method_features(method, &data, &lookup, config.normalize_embeddings);
        let cell = features.and_then(|(train, test)| {
            fit_and_score(&train, &train_labels, &test, &test_labels, &config.svm)
        });
        match cell {
            Ok(acc) => {
                info!(dataset = name, method = %method.name, accuracy = acc, "method scored");
                out.push(Some(acc));
            }
            Err(reason) => {
                warn!(dataset = name, method = %method.name, reason = %reason, "cell masked");
                out.push(None);
            }
        }
    }
    Ok(out)
}

fn embed_dataset(embedder: &SeriesEmbedder<'_>, data: &TimeSeriesDataset, kind: PromptKind) -> Result<KindEmbeddings, EmbedError> {
    let split = |series: &[crate::dataset::LabeledSeries], split: Split| -> Result<Vec<Embedding>, EmbedError> {
        series
            .par_iter()
            .enumerate()
            .map(|(index, s)| embedder.embed(SeriesRef { dataset: &data.name, split, index }, &s.values, kind))
            .collect()
    };
    Ok(KindEmbeddings { train: split(&data.train, Split::Train)?, test: split(&data.test, Split::Test)? })
}

type Rows = Vec<Vec<f64>>;

fn method_features<'a>(
    method: &MethodSpec,
    data: &TimeSeriesDataset,
    lookup: &impl Fn(PromptKind) -> Option<&'a KindEmbeddings>,
    normalize: bool,
) -> Result<(Rows, Rows), String> {
    let finish = |e: Embedding| if normalize { e.l2_normalized().into_vec() } else { e.into_vec() };
    let unavailable = |k: PromptKind| format!("{k} embeddings unavailable");
    match &method.source {
        MethodSource::RawSeries => {
            if data.common_length().is_none() {
                return Err("series lengths differ, raw-series benchmark needs equal lengths".into());
            }
            let rows = |s: &[crate::dataset::LabeledSeries]| s.iter().map(|s| s.values.clone()).collect();
            Ok((rows(&data.train), rows(&data.test)))
        }
        MethodSource::Prompt(k) => {
            let e = lookup(*k).ok_or_else(|| unavailable(*k))?;
            let rows = |v: &[Embedding]| v.iter().cloned().map(finish).collect();
            Ok((rows(&e.train), rows(&e.test)))
        }
        MethodSource::Fusion(set) => {
            let parts: Vec<(PromptKind, &KindEmbeddings)> =
                set.iter().map(|&k| lookup(k).map(|e| (k, e)).ok_or_else(|| unavailable(k))).collect::<Result<_, _>>()?;
            let fused = |pick: &dyn Fn(&KindEmbeddings) -> &[Embedding], n: usize| -> Result<Rows, String> {
                (0..n)
                    .map(|i| {
                        let pieces: Vec<(PromptKind, Embedding)> =
                            parts.iter().map(|(k, e)| (*k, pick(e)[i].clone())).collect();
                        fuse(&pieces).map(finish).map_err(|e| e.to_string())
                    })
                    .collect()
            };
            Ok((fused(&|e| &e.train, data.train.len())?, fused(&|e| &e.test, data.test.len())?))
        }
    }
}

fn fit_and_score(train: &Rows, train_labels: &[i64], test: &Rows, test_labels: &[i64], svm: &SvmConfig) -> Result<f64, String> {
    let model = train_multiclass(train, train_labels, svm).map_err(|e| e.to_string())?;
    if !model.converged() {
        warn!("solver hit its iteration cap before converging");
    }
    evaluate(&model, test, test_labels).map_err(|e| e.to_string())
}

/// Writes every report file into `dir`. The ablation file covers the fusion
/// methods with their ranks from the full pool.
pub fn write_reports(
    dir: &Path,
    matrix: &AccuracyMatrix,
    report: &RankReport,
    methods: &[MethodSpec],
) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();
    let mut emit = |name: &str, body: Vec<u8>| -> Result<(), RunError> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
        files.push(path);
        Ok(())
    };

    let mut buf = Vec::new();
    write_per_dataset_csv(matrix, &mut buf)?;
    emit(PER_DATASET_FILE, buf)?;

    let mut buf = Vec::new();
    write_summary_csv(report, None, &mut buf)?;
    emit(SUMMARY_FILE, buf)?;

    let fusion: Vec<usize> = methods.iter().enumerate().filter(|(_, m)| m.is_fusion()).map(|(i, _)| i).collect();
    let mut buf = Vec::new();
    write_summary_csv(report, Some(&fusion), &mut buf)?;
    emit(ABLATION_FILE, buf)?;

    emit(DIAGRAM_FILE, render_cd_diagram(report).into_bytes())?;
    Ok(files)
}
