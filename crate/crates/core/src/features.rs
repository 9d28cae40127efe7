//! Summary-statistic features of a single series.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("cannot extract features from an empty series")]
    Empty,
    #[error("series contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("unknown feature name {0:?}")]
    UnknownFeature(String),
    #[error("feature {0:?} listed twice")]
    DuplicateFeature(String),
    #[error("feature list is empty")]
    EmptyList,
}

/// The implemented features. `ALL` holds the canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    Sum,
    Median,
    Mean,
    Length,
    StandardDeviation,
    Variance,
    RootMeanSquare,
    Maximum,
    AbsoluteMaximum,
    Minimum,
}

impl Feature {
    pub const ALL: [Feature; 10] = [
        Feature::Sum,
        Feature::Median,
        Feature::Mean,
        Feature::Length,
        Feature::StandardDeviation,
        Feature::Variance,
        Feature::RootMeanSquare,
        Feature::Maximum,
        Feature::AbsoluteMaximum,
        Feature::Minimum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Sum => "sum",
            Feature::Median => "median",
            Feature::Mean => "mean",
            Feature::Length => "length",
            Feature::StandardDeviation => "standard_deviation",
            Feature::Variance => "variance",
            Feature::RootMeanSquare => "root_mean_square",
            Feature::Maximum => "maximum",
            Feature::AbsoluteMaximum => "absolute_maximum",
            Feature::Minimum => "minimum",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| FeatureError::UnknownFeature(s.to_string()))
    }
}

/// An ordered selection of features, canonical by default.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureSet(Vec<Feature>);

impl Default for FeatureSet {
    fn default() -> Self {
        FeatureSet(Feature::ALL.to_vec())
    }
}

impl FeatureSet {
    pub fn new(features: Vec<Feature>) -> Result<Self, FeatureError> {
        if features.is_empty() {
            return Err(FeatureError::EmptyList);
        }
        for (i, f) in features.iter().enumerate() {
            if features[..i].contains(f) {
                return Err(FeatureError::DuplicateFeature(f.name().to_string()));
            }
        }
        Ok(FeatureSet(features))
    }

    /// Parses a comma-separated list of feature names.
    pub fn parse_list(s: &str) -> Result<Self, FeatureError> {
        let features = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Feature::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(features)
    }

    pub fn features(&self) -> &[Feature] {
        &self.0
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.0.iter().map(|f| f.name()).collect()
    }
}

/// Named feature values in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    entries: Vec<(Feature, f64)>,
}

impl FeatureVector {
    pub fn entries(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.entries.iter().map(|(f, v)| (f.name(), *v))
    }

    pub fn get(&self, feature: Feature) -> Option<f64> {
        self.entries.iter().find(|(f, _)| *f == feature).map(|(_, v)| *v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, v)| *v).collect()
    }

    /// Builds a vector from raw entries; used for prompts over externally
    /// computed features.
    pub fn from_entries(entries: Vec<(Feature, f64)>) -> Self {
        FeatureVector { entries }
    }
}

/// Moments shared by several features.
struct Moments {
    sum: f64,
    mean: f64,
    variance: f64,
    min: f64,
    max: f64,
    median: f64,
}

fn moments(values: &[f64]) -> Moments {
    let n = values.len() as f64;
    let sum = neumaier_sum(values.iter().copied());
    let mean = sum / n;
    // Second pass about the mean, with the usual correction term for the
    // residual error in `mean`.
    let dev = neumaier_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let drift = neumaier_sum(values.iter().map(|v| v - mean));
    let variance = ((dev - drift * drift / n) / n).max(0.0);

    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 { sorted[mid] } else { (sorted[mid - 1] + sorted[mid]) / 2.0 };

    Moments { sum, mean, variance, min, max, median }
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Extracts the canonical feature set.
pub fn extract_features(values: &[f64]) -> Result<FeatureVector, FeatureError> {
    extract_feature_set(values, &FeatureSet::default())
}

/// Extracts `set` in its declared order. Moments are population moments.
pub fn extract_feature_set(values: &[f64], set: &FeatureSet) -> Result<FeatureVector, FeatureError> {
    if values.is_empty() {
        return Err(FeatureError::Empty);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(FeatureError::NonFinite(i));
    }
    let m = moments(values);
    let std = m.variance.sqrt();
    let entries = set
        .features()
        .iter()
        .map(|&f| {
            let v = match f {
                Feature::Sum => m.sum,
                Feature::Median => m.median,
                Feature::Mean => m.mean,
                Feature::Length => values.len() as f64,
                Feature::StandardDeviation => std,
                Feature::Variance => m.variance,
                // E[x^2] = var + mean^2 keeps the three moments consistent.
                Feature::RootMeanSquare => (m.variance + m.mean * m.mean).sqrt(),
                Feature::Maximum => m.max,
                Feature::AbsoluteMaximum => m.max.abs().max(m.min.abs()),
                Feature::Minimum => m.min,
            };
            (f, v)
        })
        .collect();
    Ok(FeatureVector { entries })
}

/// Formats `x` with `digits` significant digits in the style of C's `%g`:
/// trailing zeros dropped, exponent form outside [1e-4, 10^digits).
pub fn format_significant(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
