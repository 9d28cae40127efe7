//! Cross-dataset comparison of methods: average accuracy, average rank,
//! the Friedman statistic, Nemenyi critical differences, and CD diagrams.

mod diagram;
mod nemenyi;
mod ranks;
mod report;

use thiserror::Error;

pub use diagram::render_cd_diagram;
pub use nemenyi::{nemenyi_cd, q_alpha_05, Q_ALPHA_05};
pub use ranks::{average_ranks, cd_cliques, friedman_statistic, rank_column};
pub use report::{read_per_dataset_csv, write_per_dataset_csv, write_summary_csv};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least 2 methods, got {0}")]
    TooFewMethods(usize),
    #[error("no dataset has results for every method")]
    NoCompleteDatasets,
    #[error("accuracy for {method} on {dataset} is not a number")]
    NotANumber { method: String, dataset: String },
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
    #[error("only alpha = 0.05 is supported, got {0}")]
    UnsupportedAlpha(f64),
    #[error("critical-difference table covers 2..=20 methods, got {0}")]
    MethodCountOutOfRange(usize),
    #[error("need at least one dataset")]
    NoDatasets,
    #[error("malformed results file: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Accuracies of `k` methods on `N` datasets. `None` marks a skipped cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyMatrix {
    methods: Vec<String>,
    datasets: Vec<String>,
    /// `cells[m][d]`
    cells: Vec<Vec<Option<f64>>>,
}

impl AccuracyMatrix {
    pub fn new(methods: Vec<String>, datasets: Vec<String>, cells: Vec<Vec<Option<f64>>>) -> Result<Self, StatsError> {
        if methods.len() < 2 {
            return Err(StatsError::TooFewMethods(methods.len()));
        }
        if cells.len() != methods.len() || cells.iter().any(|row| row.len() != datasets.len()) {
            return Err(StatsError::Shape(format!("expected {} x {}", methods.len(), datasets.len())));
        }
        for (m, row) in cells.iter().enumerate() {
            for (d, cell) in row.iter().enumerate() {
                if cell.is_some_and(f64::is_nan) {
                    return Err(StatsError::NotANumber { method: methods[m].clone(), dataset: datasets[d].clone() });
                }
            }
        }
        Ok(AccuracyMatrix { methods, datasets, cells })
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn cell(&self, method: usize, dataset: usize) -> Option<f64> {
        self.cells[method][dataset]
    }

    /// Indices of datasets with a value for every method.
    pub fn complete_datasets(&self) -> Vec<usize> {
        (0..self.datasets.len()).filter(|&d| self.cells.iter().all(|row| row[d].is_some())).collect()
    }

    /// Datasets with at least one skipped cell, with the skipped methods.
    pub fn skipped(&self) -> Vec<(String, Vec<String>)> {
        (0..self.datasets.len())
            .filter_map(|d| {
                let missing: Vec<String> = (0..self.methods.len())
                    .filter(|&m| self.cells[m][d].is_none())
                    .map(|m| self.methods[m].clone())
                    .collect();
                (!missing.is_empty()).then(|| (self.datasets[d].clone(), missing))
            })
            .collect()
    }

    /// Mean over each method's non-skipped cells; `None` if it has none.
    pub fn average_accuracy(&self) -> Vec<Option<f64>> {
        self.cells
            .iter()
            .map(|row| {
                let vals: Vec<f64> = row.iter().flatten().copied().collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect()
    }

    /// Restriction to a subset of methods, in the given order.
    pub fn select_methods(&self, indices: &[usize]) -> Result<Self, StatsError> {
        AccuracyMatrix::new(
            indices.iter().map(|&i| self.methods[i].clone()).collect(),
            self.datasets.clone(),
            indices.iter().map(|&i| self.cells[i].clone()).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub methods: Vec<String>,
    pub average_accuracy: Vec<Option<f64>>,
    pub average_rank: Vec<f64>,
    pub ranked_datasets: usize,
    pub friedman_statistic: f64,
    /// Nemenyi critical difference at alpha = 0.05, when the method count is
    /// inside the table.
    pub cd: Option<f64>,
    /// Groups of method indices whose ranks are not significantly different.
    pub cliques: Vec<Vec<usize>>,
    pub skipped: Vec<(String, Vec<String>)>,
}

impl RankReport {
    pub fn from_matrix(matrix: &AccuracyMatrix) -> Result<Self, StatsError> {
        let average_rank = average_ranks(matrix)?;
        let k = matrix.methods().len();
        let n = matrix.complete_datasets().len();
        let friedman = friedman_statistic(&average_rank, n);
        let cd = match nemenyi_cd(k, n, 0.05) {
            Ok(cd) => Some(cd),
            Err(StatsError::MethodCountOutOfRange(_)) => None,
            Err(e) => return Err(e),
        };
        let cliques = match cd {
            Some(cd) => cd_cliques(&average_rank, cd),
            None => (0..k).map(|i| vec![i]).collect(),
        };
        Ok(RankReport {
            methods: matrix.methods().to_vec(),
            average_accuracy: matrix.average_accuracy(),
            average_rank,
            ranked_datasets: n,
            friedman_statistic: friedman,
            cd,
            cliques,
            skipped: matrix.skipped(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_validation() {
        let m = |cells| AccuracyMatrix::new(vec!["a".into(), "b".into()], vec!["d".into()], cells);
        assert!(m(vec![vec![Some(0.5)], vec![Some(0.6)]]).is_ok());
        assert!(matches!(m(vec![vec![Some(f64::NAN)], vec![Some(0.6)]]), Err(StatsError::NotANumber { .. })));
        assert!(matches!(m(vec![vec![Some(0.5)]]), Err(StatsError::Shape(_))));
        assert!(matches!(
            AccuracyMatrix::new(vec!["a".into()], vec![], vec![vec![]]),
            Err(StatsError::TooFewMethods(1))
        ));
    }

    #[test]
    fn report_with_skips() {
        let mat = AccuracyMatrix::new(
            vec!["A".into(), "B".into(), "TS".into()],
            vec!["d1".into(), "d2".into(), "d3".into()],
            vec![
                vec![Some(0.5), Some(0.6), Some(0.7)],
                vec![Some(0.4), Some(0.6), Some(0.9)],
                vec![Some(0.9), None, Some(1.0)],
            ],
        )
        .unwrap();
        let r = RankReport::from_matrix(&mat).unwrap();
        assert_eq!(r.ranked_datasets, 2);
        assert_eq!(r.skipped, vec![("d2".to_string(), vec!["TS".to_string()])]);
        assert_eq!(r.average_rank, vec![2.5, 2.5, 1.0]);
        assert!((r.average_accuracy[2].unwrap() - 0.95).abs() < 1e-12);
        let covered: std::collections::BTreeSet<usize> = r.cliques.iter().flatten().copied().collect();
        assert_eq!(covered.len(), 3);
    }
}
