use rayon::prelude::*;

use super::kernel::resolve_gamma;
use super::smo::{train_binary_with_gamma, BinarySvm};
use super::{check_dims, SvmConfig, SvmError};

/// One-vs-one ensemble. `pairs` holds the machine for every `(i, j)` with
/// `i < j` in lexicographic order; class `classes[i]` is its `+1` side.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub classes: Vec<i64>,
    pub dim: usize,
    pub gamma: f64,
    pub pairs: Vec<BinarySvm>,
}

impl SvmModel {
    pub fn pair_indices(k: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..k).flat_map(move |i| (i + 1..k).map(move |j| (i, j)))
    }

    pub fn converged(&self) -> bool {
        self.pairs.iter().all(|p| p.converged)
    }

    /// Majority vote over the pairwise machines; ties go to the smallest
    /// class id, and a zero decision value votes for the smaller class.
    pub fn predict(&self, x: &[f64]) -> Result<i64, SvmError> {
        if x.len() != self.dim {
            return Err(SvmError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let mut votes = vec![0usize; self.classes.len()];
        for ((i, j), m) in Self::pair_indices(self.classes.len()).zip(&self.pairs) {
            if m.decision_value(x) >= 0.0 {
                votes[i] += 1;
            } else {
                votes[j] += 1;
            }
        }
        let best = votes.iter().copied().max().unwrap_or(0);
        let winner = votes.iter().position(|&v| v == best).unwrap_or(0);
        Ok(self.classes[winner])
    }
}

pub fn train_multiclass(rows: &[Vec<f64>], labels: &[i64], cfg: &SvmConfig) -> Result<SvmModel, SvmError> {
    cfg.validate()?;
    let dim = check_dims(rows)?;
    if rows.len() != labels.len() {
        return Err(SvmError::LabelCount { samples: rows.len(), labels: labels.len() });
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(SvmError::SingleClass);
    }
    let gamma = resolve_gamma(rows, cfg)?;
    let pairs: Vec<(usize, usize)> = SvmModel::pair_indices(classes.len()).collect();
    let pairs = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (pos, neg) = (classes[i], classes[j]);
            let mut sub = Vec::new();
            let mut y = Vec::new();
            for (r, &l) in rows.iter().zip(labels) {
                if l == pos || l == neg {
                    sub.push(r.clone());
                    y.push(if l == pos { 1.0 } else { -1.0 });
                }
            }
            train_binary_with_gamma(&sub, &y, gamma, cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SvmModel { classes, dim, gamma, pairs })
}

/// Fraction of exact label matches.
pub fn evaluate(model: &SvmModel, rows: &[Vec<f64>], labels: &[i64]) -> Result<f64, SvmError> {
    if rows.is_empty() {
        return Err(SvmError::Empty);
    }
    if rows.len() != labels.len() {
        return Err(SvmError::LabelCount { samples: rows.len(), labels: labels.len() });
    }
    let mut correct = 0usize;
    for (r, &l) in rows.iter().zip(labels) {
        if model.predict(r)? == l {
            correct += 1;
        }
    }
    Ok(correct as f64 / rows.len() as f64)
}
