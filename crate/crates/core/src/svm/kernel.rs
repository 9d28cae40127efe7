use super::{check_dims, Gamma, SvmConfig, SvmError};

pub fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `exp(-gamma * |x - y|^2)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64, SvmError> {
    if x.len() != y.len() {
        return Err(SvmError::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok((-gamma * squared_distance(x, y)).exp())
}

pub fn resolve_gamma(rows: &[Vec<f64>], cfg: &SvmConfig) -> Result<f64, SvmError> {
    let dim = check_dims(rows)?;
    match cfg.gamma {
        Gamma::Value(g) => Ok(g),
        Gamma::Scale => {
            let d = dim.max(1) as f64;
            let count = (rows.len() * dim) as f64;
            if count == 0.0 {
                return Ok(1.0 / d);
            }
            let mean = rows.iter().flatten().sum::<f64>() / count;
            let var = rows.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
            Ok(if var > 0.0 { 1.0 / (d * var) } else { 1.0 / d })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_values() {
        assert_eq!(rbf_kernel(&[0.3, -2.0], &[0.3, -2.0], 5.0).unwrap(), 1.0);
        let k = rbf_kernel(&[0.0, 0.0], &[1.0, 1.0], 0.5).unwrap();
        assert!((k - (-1.0f64).exp()).abs() < 1e-15);
        assert!((k - 0.367879).abs() < 1e-6);
        assert!(rbf_kernel(&[0.0], &[0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn gamma_rules() {
        let explicit = SvmConfig { gamma: Gamma::Value(0.2), ..Default::default() };
        assert_eq!(resolve_gamma(&[vec![1.0, 2.0]], &explicit).unwrap(), 0.2);
        let scale = SvmConfig::default();
        assert_eq!(resolve_gamma(&[vec![3.0; 8], vec![3.0; 8]], &scale).unwrap(), 1.0 / 8.0);
        assert_eq!(resolve_gamma(&[vec![0.0, 0.0], vec![2.0, 2.0]], &scale).unwrap(), 0.5);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(x in prop::collection::vec(-5f64..5.0, 3), y in prop::collection::vec(-5f64..5.0, 3), g in 0.01f64..3.0) {
            let a = rbf_kernel(&x, &y, g).unwrap();
            prop_assert_eq!(a, rbf_kernel(&y, &x, g).unwrap());
            prop_assert!(a > 0.0 && a <= 1.0);
        }
    }
}
