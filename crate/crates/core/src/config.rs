//! Run configuration: INI-style text with `[section]` headers, `key = value`
//! lines, and `#` comments (whole-line, or after whitespace on a value line).
//! String values may be double-quoted to keep leading/trailing spaces or a
//! `#`. Unknown sections and keys are rejected.
//!
//! ```text
//! [data]
//! root = ucr                  # required
//! filter = Coffee, Beef
//! z_normalize = false
//!
//! [backend]
//! backend = mock              # or http
//! endpoint = http://127.0.0.1:8080
//! mock.dimension = 32
//! mock.seed = 7
//! mock.max_tokens = 512
//! batch_size = 16
//! retries = 3
//!
//! [prompts]
//! kinds = sdp, ddp, fp
//! fusion = sdp+ddp+fp; sdp+ddp; sdp+fp; ddp+fp
//! raw_ts_benchmark = true
//! precision = 4
//! separator = ", "
//! pooling = mean
//! normalize_embeddings = false
//! features = sum, median, mean, length, standard_deviation, variance, root_mean_square, maximum, absolute_maximum, minimum
//!
//! [svm]
//! c = 1.0
//! gamma = scale
//! tolerance = 0.001
//! max_passes = 10
//! max_iterations = 1000000
//!
//! [run]
//! output_dir = lamper-out
//! cache_dir = lamper-out/cache
//! concurrency = 4
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::embedding::{EmbedConfig, Pooling, RetryPolicy};
use crate::features::FeatureSet;
use crate::prompt::{PromptKind, RenderConfig, MAX_PRECISION};
use crate::svm::{Gamma, SvmConfig};

#[derive(Debug, Error, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line: Some(line), message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Mock { dimension: usize, seed: u64, max_tokens: usize },
    Http { endpoint: String, batch_size: usize, retry: RetryPolicy },
}

/// What a method feeds to the classifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MethodSource {
    Prompt(PromptKind),
    /// Concatenated embeddings of two or more kinds, canonical order.
    Fusion(Vec<PromptKind>),
    RawSeries,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSpec {
    pub name: String,
    pub source: MethodSource,
}

impl MethodSpec {
    pub fn is_fusion(&self) -> bool {
        matches!(self.source, MethodSource::Fusion(_))
    }
}

/// Name of a fusion method: `Fusion` for all three kinds, else `SDP+DDP`.
pub fn fusion_name(kinds: &[PromptKind]) -> String {
    if kinds.len() == PromptKind::ALL.len() {
        "Fusion".to_string()
    } else {
        kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>().join("+")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset_root: PathBuf,
    pub dataset_filter: Option<Vec<String>>,
    pub z_normalize: bool,
    pub backend: BackendSpec,
    pub prompt_kinds: Vec<PromptKind>,
    pub fusion_sets: Vec<Vec<PromptKind>>,
    pub raw_ts_benchmark: bool,
    pub embed: EmbedConfig,
    pub normalize_embeddings: bool,
    pub svm: SvmConfig,
    pub output_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub concurrency: usize,
}

impl RunConfig {
    /// Methods in declaration order: single kinds, fusion sets, raw series.
    pub fn methods(&self) -> Vec<MethodSpec> {
        let mut out: Vec<MethodSpec> = self
            .prompt_kinds
            .iter()
            .map(|&k| MethodSpec { name: k.as_str().to_string(), source: MethodSource::Prompt(k) })
            .collect();
        out.extend(
            self.fusion_sets
                .iter()
                .map(|set| MethodSpec { name: fusion_name(set), source: MethodSource::Fusion(set.clone()) }),
        );
        if self.raw_ts_benchmark {
            out.push(MethodSpec { name: "TS".to_string(), source: MethodSource::RawSeries });
        }
        out
    }

    /// Every prompt kind that must be embedded, in canonical order.
    pub fn required_kinds(&self) -> Vec<PromptKind> {
        let set: BTreeSet<PromptKind> =
            self.prompt_kinds.iter().chain(self.fusion_sets.iter().flatten()).copied().collect();
        set.into_iter().collect()
    }

    /// Resolves relative paths against `base` (normally the config file's
    /// directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset_root);
        fix(&mut self.output_dir);
        if let Some(c) = self.cache_dir.as_mut() {
            fix(c);
        }
    }
}

struct Raw {
    value: String,
    line: usize,
}

const KEYS: &[(&str, &[&str])] = &[
    ("data", &["root", "filter", "z_normalize"]),
    (
        "backend",
        &["backend", "endpoint", "mock.dimension", "mock.seed", "mock.max_tokens", "batch_size", "retries", "retry_delay_ms", "timeout_s"],
    ),
    (
        "prompts",
        &["kinds", "fusion", "raw_ts_benchmark", "precision", "separator", "pooling", "normalize_embeddings", "features"],
    ),
    ("svm", &["c", "gamma", "tolerance", "max_passes", "max_iterations"]),
    ("run", &["output_dir", "cache_dir", "concurrency"]),
];

fn strip_value(raw: &str, line: usize) -> Result<String, ConfigError> {
    let raw = raw.trim();
    if let Some(rest) = raw.strip_prefix('"') {
        let mut out = String::new();
        let mut chars = rest.chars();
        while let Some(c) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some(c @ ('"' | '\\')) => out.push(c),
                    other => return Err(err(line, format!("bad escape \\{}", other.unwrap_or(' ')))),
                },
                '"' => {
                    let tail = chars.as_str().trim();
                    if !(tail.is_empty() || tail.starts_with('#')) {
                        return Err(err(line, format!("unexpected text after quoted value: {tail:?}")));
                    }
                    return Ok(out);
                }
                c => out.push(c),
            }
        }
        return Err(err(line, "unterminated quoted value"));
    }
    let value = match raw.find(" #").or_else(|| raw.find("\t#")) {
        Some(i) => &raw[..i],
        None => raw,
    };
    Ok(value.trim().to_string())
}

/// Parses, defaults, and checks a run configuration.
pub fn validate_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: Vec<(String, Raw)> = Vec::new();
    let mut section: Option<&'static str> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, "section header missing `]`"))?
                .trim();
            let known = KEYS.iter().find(|(s, _)| *s == name).map(|(s, _)| *s);
            section = Some(known.ok_or_else(|| err(line_no, format!("unknown section [{name}]")))?);
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| err(line_no, "expected `key = value`"))?;
        let key = key.trim();
        let sec = section.ok_or_else(|| err(line_no, format!("key {key:?} appears before any section")))?;
        let allowed = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(err(line_no, format!("unknown key {key:?} in [{sec}]")));
        }
        let full = format!("{sec}.{key}");
        if let Some((_, prev)) = entries.iter().find(|(k, _)| *k == full) {
            return Err(err(line_no, format!("{full} already set on line {}", prev.line)));
        }
        entries.push((full, Raw { value: strip_value(value, line_no)?, line: line_no }));
    }
    Fields { entries }.build()
}

struct Fields {
    entries: Vec<(String, Raw)>,
}

impl Fields {
    fn raw(&self, key: &str) -> Option<&Raw> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, r)| r)
    }

    fn parse<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(r) => r.value.parse().map_err(|e| err(r.line, format!("{key}: invalid value {:?}: {e}", r.value))),
        }
    }

    fn positive<T: FromStr + PartialOrd + Default + Copy + fmt::Display>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let v = self.parse(key, default)?;
        if v <= T::default() {
            let line = self.raw(key).map(|r| r.line);
            return Err(ConfigError { line, message: format!("{key} must be positive, got {v}") });
        }
        Ok(v)
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.raw(key).map(|r| r.line)
    }

    fn build(self) -> Result<RunConfig, ConfigError> {
        let root = self
            .raw("data.root")
            .ok_or(ConfigError { line: None, message: "data.root is required".into() })?;
        if root.value.is_empty() {
            return Err(err(root.line, "data.root is empty"));
        }
        let dataset_root = PathBuf::from(&root.value);
        let dataset_filter = self.raw("data.filter").map(|r| {
            r.value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
        });

        let backend = match self.raw("backend.backend").map(|r| (r.value.as_str(), r.line)) {
            Some(("mock", _)) => BackendSpec::Mock {
                dimension: self.positive("backend.mock.dimension", 32usize)?,
                seed: self.parse("backend.mock.seed", 0u64)?,
                max_tokens: self.positive("backend.mock.max_tokens", 512usize)?,
            },
            Some(("http", line)) => {
                let endpoint = self
                    .raw("backend.endpoint")
                    .map(|r| r.value.clone())
                    .ok_or_else(|| err(line, "http backend needs an endpoint"))?;
                let defaults = RetryPolicy::default();
                BackendSpec::Http {
                    endpoint,
                    batch_size: self.positive("backend.batch_size", 16usize)?,
                    retry: RetryPolicy {
                        retries: self.parse("backend.retries", defaults.retries)?,
                        base_delay: Duration::from_millis(
                            self.parse("backend.retry_delay_ms", defaults.base_delay.as_millis() as u64)?,
                        ),
                        timeout: Duration::from_secs(self.positive("backend.timeout_s", defaults.timeout.as_secs())?),
                    },
                }
            }
            Some((other, line)) => return Err(err(line, format!("backend must be mock or http, got {other:?}"))),
            None => return Err(ConfigError { line: None, message: "backend.backend is required (mock or http)".into() }),
        };

        let prompt_kinds = match self.raw("prompts.kinds") {
            None => PromptKind::ALL.to_vec(),
            Some(r) => {
                let mut kinds = Vec::new();
                for tok in r.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let k: PromptKind = tok.parse().map_err(|e: String| err(r.line, e))?;
                    if kinds.contains(&k) {
                        return Err(err(r.line, format!("prompt kind {k} listed twice")));
                    }
                    kinds.push(k);
                }
                kinds
            }
        };

        let fusion_sets = match self.raw("prompts.fusion") {
            None => vec![
                PromptKind::ALL.to_vec(),
                vec![PromptKind::Sdp, PromptKind::Ddp],
                vec![PromptKind::Sdp, PromptKind::Fp],
                vec![PromptKind::Ddp, PromptKind::Fp],
            ],
            Some(r) => {
                let mut sets: Vec<Vec<PromptKind>> = Vec::new();
                for group in r.value.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                    let mut set = Vec::new();
                    for tok in group.split('+') {
                        let k: PromptKind = tok.parse().map_err(|e: String| err(r.line, e))?;
                        if set.contains(&k) {
                            return Err(err(r.line, format!("fusion set {group:?} repeats {k}")));
                        }
                        set.push(k);
                    }
                    if set.len() < 2 {
                        return Err(err(r.line, format!("fusion set {group:?} needs at least two kinds")));
                    }
                    set.sort();
                    if sets.contains(&set) {
                        return Err(err(r.line, format!("fusion set {group:?} listed twice")));
                    }
                    sets.push(set);
                }
                sets
            }
        };

        let raw_ts_benchmark = self.parse("prompts.raw_ts_benchmark", true)?;
        let precision: u8 = self.parse("prompts.precision", 4u8)?;
        if precision > MAX_PRECISION {
            return Err(err(self.line("prompts.precision").unwrap_or(0), format!("precision must be in [0, {MAX_PRECISION}]")));
        }
        let value_separator = self.raw("prompts.separator").map(|r| r.value.clone()).unwrap_or_else(|| ", ".into());
        if value_separator.is_empty() {
            return Err(err(self.line("prompts.separator").unwrap_or(0), "separator must not be empty"));
        }
        let pooling = match self.raw("prompts.pooling").map(|r| (r.value.as_str(), r.line)) {
            None | Some(("mean", _)) => Pooling::Mean,
            Some(("max", _)) => Pooling::Max,
            Some((other, line)) => return Err(err(line, format!("pooling must be mean or max, got {other:?}"))),
        };
        let features = match self.raw("prompts.features") {
            None => FeatureSet::default(),
            Some(r) => FeatureSet::parse_list(&r.value).map_err(|e| err(r.line, e.to_string()))?,
        };
        let normalize_embeddings = self.parse("prompts.normalize_embeddings", false)?;

        let gamma = match self.raw("svm.gamma") {
            None => Gamma::Scale,
            Some(r) if r.value == "scale" => Gamma::Scale,
            Some(r) => {
                let g: f64 = r.value.parse().map_err(|_| err(r.line, format!("gamma must be `scale` or a number, got {:?}", r.value)))?;
                if !(g > 0.0 && g.is_finite()) {
                    return Err(err(r.line, "gamma must be positive"));
                }
                Gamma::Value(g)
            }
        };
        let defaults = SvmConfig::default();
        let svm = SvmConfig {
            c: self.positive("svm.c", defaults.c)?,
            gamma,
            tolerance: self.positive("svm.tolerance", defaults.tolerance)?,
            max_passes: self.positive("svm.max_passes", defaults.max_passes)?,
            max_iterations: self.positive("svm.max_iterations", defaults.max_iterations)?,
        };

        let output_dir = self.raw("run.output_dir").map(|r| PathBuf::from(&r.value)).unwrap_or_else(|| "lamper-out".into());
        let cache_dir = Some(
            self.raw("run.cache_dir").map(|r| PathBuf::from(&r.value)).unwrap_or_else(|| output_dir.join("cache")),
        );
        let concurrency = self.positive("run.concurrency", 4usize)?;

        let cfg = RunConfig {
            dataset_root,
            dataset_filter,
            z_normalize: self.parse("data.z_normalize", false)?,
            backend,
            prompt_kinds,
            fusion_sets,
            raw_ts_benchmark,
            embed: EmbedConfig { render: RenderConfig { precision, value_separator }, pooling, features },
            normalize_embeddings,
            svm,
            output_dir,
            cache_dir,
            concurrency,
        };
        let methods = cfg.methods();
        if methods.len() < 2 {
            let line = self.line("prompts.kinds").or(self.line("prompts.fusion"));
            return Err(ConfigError {
                line,
                message: format!("ranking needs at least two methods, configuration declares {}", methods.len()),
            });
        }
        Ok(cfg)
    }
}
