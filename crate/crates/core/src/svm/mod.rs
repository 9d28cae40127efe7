//! RBF-kernel support vector machine trained by sequential minimal
//! optimization, with a one-vs-one multiclass reduction.

mod kernel;
mod multiclass;
mod persist;
mod smo;

use thiserror::Error;

pub use kernel::{rbf_kernel, resolve_gamma, squared_distance};
pub use multiclass::{evaluate, train_multiclass, SvmModel};
pub use persist::{read_model, write_model, MODEL_MAGIC};
pub use smo::{kkt_residual, solve_smo, train_binary_smo, BinarySvm, SmoSolution};

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("vector has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training data is empty")]
    Empty,
    #[error("training data holds a single class")]
    SingleClass,
    #[error("{samples} samples but {labels} labels")]
    LabelCount { samples: usize, labels: usize },
    #[error("binary labels must be -1 or +1, got {0}")]
    BadBinaryLabel(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    /// `1 / (d * var(X))` over all entries of the training matrix.
    Scale,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: Gamma,
    pub tolerance: f64,
    /// Consecutive full sweeps without progress required to stop.
    pub max_passes: usize,
    /// Cap on successful pair updates.
    pub max_iterations: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, gamma: Gamma::Scale, tolerance: 1e-3, max_passes: 10, max_iterations: 1_000_000 }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvmError::Config(format!("C must be positive, got {}", self.c)));
        }
        if let Gamma::Value(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(SvmError::Config(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(SvmError::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_passes == 0 || self.max_iterations == 0 {
            return Err(SvmError::Config("max_passes and max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_dims(rows: &[Vec<f64>]) -> Result<usize, SvmError> {
    let dim = rows.first().ok_or(SvmError::Empty)?.len();
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(SvmError::DimensionMismatch { expected: dim, found: r.len() });
    }
    Ok(dim)
}
