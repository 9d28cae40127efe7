//! UCR-archive split files: parsing, loading, and enumeration.
//!
//! A split file holds one series per line, the integer class label first and
//! the values after it. Both tab- and comma-separated variants exist in the
//! archive; the separator is detected once per file from its first record.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("input contains no records")]
    Empty,
    #[error("line {line}: expected a label and at least one value")]
    TooFewFields { line: usize },
    #[error("line {line}: field {field} is not numeric: {token:?}")]
    NotNumeric { line: usize, field: usize, token: String },
    #[error("line {line}: field {field} is not finite: {token:?}")]
    NonFinite { line: usize, field: usize, token: String },
    #[error("line {line}: label {token:?} is not an integer")]
    NonIntegralLabel { line: usize, token: String },
    #[error("input is not valid UTF-8")]
    NotUtf8,
    #[error("missing split file {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<DatasetError>,
    },
    #[error("{split} split of {name} is empty")]
    EmptySplit { name: String, split: &'static str },
    #[error("{name}: training split has {count} class(es), need at least 2")]
    TooFewClasses { name: String, count: usize },
    #[error("{name}: test label {label} does not occur in the training split")]
    UnseenTestLabel { name: String, label: i64 },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One univariate series with its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub label: i64,
    pub values: Vec<f64>,
}

impl LabeledSeries {
    /// Renders the series as one split-file record. Values use the shortest
    /// decimal form that parses back to the identical `f64`.
    pub fn to_line(&self, separator: char) -> String {
        let mut line = self.label.to_string();
        for v in &self.values {
            line.push(separator);
            line.push_str(&v.to_string());
        }
        line
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    pub name: String,
    pub train: Vec<LabeledSeries>,
    pub test: Vec<LabeledSeries>,
    pub class_count: usize,
}

impl TimeSeriesDataset {
    /// Sorted distinct training labels.
    pub fn classes(&self) -> Vec<i64> {
        let set: BTreeSet<i64> = self.train.iter().map(|s| s.label).collect();
        set.into_iter().collect()
    }

    /// The common series length, or `None` when lengths differ anywhere
    /// across both splits.
    pub fn common_length(&self) -> Option<usize> {
        let mut lens = self.train.iter().chain(&self.test).map(|s| s.values.len());
        let first = lens.next()?;
        lens.all(|l| l == first).then_some(first)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Per-series z-normalization after parsing. Off by default; archive
    /// files usually ship normalized already.
    pub z_normalize: bool,
}

/// Parses a split file. Lines are 1-based in error messages.
pub fn parse_ucr(raw: &[u8]) -> Result<Vec<LabeledSeries>, DatasetError> {
    let text = std::str::from_utf8(raw).map_err(|_| DatasetError::NotUtf8)?;
    let mut separator = None;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let sep = *separator.get_or_insert(if line.contains('\t') { '\t' } else { ',' });
        out.push(parse_record(line, sep, line_no)?);
    }
    if out.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(out)
}

fn parse_record(line: &str, sep: char, line_no: usize) -> Result<LabeledSeries, DatasetError> {
    let fields: Vec<&str> = line.split(sep).map(str::trim).collect();
    if fields.len() < 2 {
        return Err(DatasetError::TooFewFields { line: line_no });
    }
    let label = parse_label(fields[0], line_no)?;
    let values = fields[1..]
        .iter()
        .enumerate()
        .map(|(i, tok)| parse_value(tok, line_no, i + 2))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LabeledSeries { label, values })
}

fn parse_label(token: &str, line: usize) -> Result<i64, DatasetError> {
    if let Ok(v) = token.parse::<i64>() {
        return Ok(v);
    }
    let v = parse_value(token, line, 1)?;
    // "1.0" style labels are common in the comma-separated variant.
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        Ok(v as i64)
    } else {
        Err(DatasetError::NonIntegralLabel { line, token: token.to_string() })
    }
}

fn parse_value(token: &str, line: usize, field: usize) -> Result<f64, DatasetError> {
    let v: f64 = token.parse().map_err(|_| DatasetError::NotNumeric {
        line,
        field,
        token: token.to_string(),
    })?;
    if !v.is_finite() {
        return Err(DatasetError::NonFinite { line, field, token: token.to_string() });
    }
    Ok(v)
}

fn split_path(root: &Path, name: &str, split: &str) -> PathBuf {
    root.join(name).join(format!("{name}_{split}.tsv"))
}

fn read_split(path: &Path) -> Result<Vec<LabeledSeries>, DatasetError> {
    if !path.is_file() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    let raw = fs::read(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    parse_ucr(&raw).map_err(|e| DatasetError::Parse { path: path.to_path_buf(), source: Box::new(e) })
}

pub fn load_dataset(root: &Path, name: &str) -> Result<TimeSeriesDataset, DatasetError> {
    load_dataset_with(root, name, LoadOptions::default())
}

pub fn load_dataset_with(
    root: &Path,
    name: &str,
    opts: LoadOptions,
) -> Result<TimeSeriesDataset, DatasetError> {
    let mut train = read_split(&split_path(root, name, "TRAIN"))?;
    let mut test = read_split(&split_path(root, name, "TEST"))?;
    if opts.z_normalize {
        for s in train.iter_mut().chain(test.iter_mut()) {
            z_normalize(&mut s.values);
        }
    }
    let classes: BTreeSet<i64> = train.iter().map(|s| s.label).collect();
    if classes.len() < 2 {
        return Err(DatasetError::TooFewClasses { name: name.to_string(), count: classes.len() });
    }
    if test.is_empty() {
        return Err(DatasetError::EmptySplit { name: name.to_string(), split: "test" });
    }
    if let Some(s) = test.iter().find(|s| !classes.contains(&s.label)) {
        return Err(DatasetError::UnseenTestLabel { name: name.to_string(), label: s.label });
    }
    Ok(TimeSeriesDataset { name: name.to_string(), train, test, class_count: classes.len() })
}

/// Names of subdirectories of `root` holding both split files, sorted.
pub fn list_datasets(root: &Path) -> Result<Vec<String>, DatasetError> {
    let io = |source| DatasetError::Io { path: root.to_path_buf(), source };
    let mut names = Vec::new();
    for entry in fs::read_dir(root).map_err(io)? {
        let entry = entry.map_err(io)?;
        if !entry.file_type().map_err(io)?.is_dir() {
            continue;
        }
        let Some(name) = entry.file_name().to_str().map(str::to_owned) else {
            continue;
        };
        if split_path(root, &name, "TRAIN").is_file() && split_path(root, &name, "TEST").is_file() {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

/// Population z-normalization in place. Constant series become all zeros.
pub fn z_normalize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    for v in values.iter_mut() {
        *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
    }
}
