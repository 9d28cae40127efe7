use super::{AccuracyMatrix, StatsError};

/// Ranks of one dataset's accuracies: 1 for the highest, ties sharing the
/// mean of the positions they occupy.
pub fn rank_column(accuracies: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..accuracies.len()).collect();
    order.sort_by(|&a, &b| accuracies[b].total_cmp(&accuracies[a]));
    let mut ranks = vec![0.0; accuracies.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && accuracies[order[end]] == accuracies[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end share their mean.
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

/// Per-method ranks averaged over the datasets with no skipped cell.
pub fn average_ranks(matrix: &AccuracyMatrix) -> Result<Vec<f64>, StatsError> {
    let complete = matrix.complete_datasets();
    if complete.is_empty() {
        return Err(StatsError::NoCompleteDatasets);
    }
    let k = matrix.methods().len();
    let mut sums = vec![0.0; k];
    for &d in &complete {
        let column: Vec<f64> = (0..k).map(|m| matrix.cell(m, d).expect("complete column")).collect();
        for (s, r) in sums.iter_mut().zip(rank_column(&column)) {
            *s += r;
        }
    }
    Ok(sums.into_iter().map(|s| s / complete.len() as f64).collect())
}

/// Friedman chi-square: `12N / (k(k+1)) * (sum R_j^2 - k(k+1)^2 / 4)`.
pub fn friedman_statistic(average_ranks: &[f64], n: usize) -> f64 {
    let k = average_ranks.len() as f64;
    let sum_sq: f64 = average_ranks.iter().map(|r| r * r).sum();
    let stat = 12.0 * n as f64 / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0);
    // Rounding can leave a tiny negative value for full ties.
    stat.max(0.0)
}

/// Maximal runs of methods, in rank order, whose rank spread is below `cd`.
/// Runs contained in another run are dropped; a method with no partner
/// forms its own singleton group.
pub fn cd_cliques(average_ranks: &[f64], cd: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..average_ranks.len()).collect();
    order.sort_by(|&a, &b| average_ranks[a].total_cmp(&average_ranks[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last_end = 0;
    for start in 0..order.len() {
        let mut end = start + 1;
        while end < order.len() && average_ranks[order[end]] - average_ranks[order[start]] < cd {
            end += 1;
        }
        // A run ending where the previous one did is contained in it.
        if end > last_end {
            groups.push(order[start..end].to_vec());
            last_end = end;
        }
    }
    groups
}
