use super::StatsError;

/// Studentized-range quantiles at alpha = 0.05 with infinite degrees of
/// freedom, divided by sqrt(2), for k = 2..=20 methods.
pub const Q_ALPHA_05: [f64; 19] = [
    1.960, 2.344, 2.569, 2.728, 2.850, 2.948, 3.031, 3.102, 3.164, 3.219, 3.268, 3.313, 3.354, 3.391, 3.426,
    3.458, 3.489, 3.517, 3.544,
];

pub fn q_alpha_05(k: usize) -> Result<f64, StatsError> {
    if !(2..=20).contains(&k) {
        return Err(StatsError::MethodCountOutOfRange(k));
    }
    Ok(Q_ALPHA_05[k - 2])
}

/// Nemenyi critical difference `q_alpha * sqrt(k (k + 1) / (6 N))`.
pub fn nemenyi_cd(k: usize, n: usize, alpha: f64) -> Result<f64, StatsError> {
    if alpha != 0.05 {
        return Err(StatsError::UnsupportedAlpha(alpha));
    }
    if n == 0 {
        return Err(StatsError::NoDatasets);
    }
    let q = q_alpha_05(k)?;
    let k = k as f64;
    Ok(q * (k * (k + 1.0) / (6.0 * n as f64)).sqrt())
}
