//! Platt-style SMO with a deterministic working-pair choice.
//!
//! The first index comes from alternating sweeps: a full sweep over every
//! sample, then repeated sweeps over the non-bound samples until they stop
//! changing. The second index maximizes `|E1 - E2|` among non-bound samples;
//! when that step makes no progress the non-bound and then all samples are
//! tried in index order from a per-sweep rotating offset. Training stops
//! after `max_passes` consecutive full sweeps without progress.

use super::kernel::{rbf_kernel, resolve_gamma, squared_distance};
use super::{check_dims, SvmConfig, SvmError};

/// Gram matrices are precomputed up to this many samples.
const GRAM_CACHE_LIMIT: usize = 4096;
/// Multipliers this close to a bound are snapped onto it.
const BOUND_EPS: f64 = 1e-12;
/// Minimum relative change of a multiplier that counts as progress.
const STEP_EPS: f64 = 1e-10;

/// One trained binary machine. The decision value is
/// `sum_i coef_i * k(sv_i, x) + bias`; positive means the `+1` class.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    /// False when the iteration cap stopped training early.
    pub converged: bool,
}

impl BinarySvm {
    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, c)| c * (-self.gamma * squared_distance(sv, x)).exp())
            .sum::<f64>()
            + self.bias
    }
}

/// Full solver state at termination, including zero multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub converged: bool,
    pub steps: usize,
}

struct Kernel<'a> {
    rows: &'a [Vec<f64>],
    gamma: f64,
    gram: Option<Vec<f64>>,
}

impl<'a> Kernel<'a> {
    fn new(rows: &'a [Vec<f64>], gamma: f64) -> Self {
        let n = rows.len();
        let gram = (n <= GRAM_CACHE_LIMIT).then(|| {
            let mut g = vec![0.0; n * n];
            for i in 0..n {
                g[i * n + i] = 1.0;
                for j in 0..i {
                    let k = (-gamma * squared_distance(&rows[i], &rows[j])).exp();
                    g[i * n + j] = k;
                    g[j * n + i] = k;
                }
            }
            g
        });
        Kernel { rows, gamma, gram }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        match &self.gram {
            Some(g) => g[i * self.rows.len() + j],
            None => (-self.gamma * squared_distance(&self.rows[i], &self.rows[j])).exp(),
        }
    }
}

struct Solver<'a> {
    kernel: Kernel<'a>,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alphas: Vec<f64>,
    /// `f(x_i) - y_i` for every sample.
    errors: Vec<f64>,
    bias: f64,
    steps: usize,
    max_steps: usize,
    sweep: usize,
}

impl Solver<'_> {
    fn n(&self) -> usize {
        self.y.len()
    }

    fn non_bound(&self, i: usize) -> bool {
        self.alphas[i] > 0.0 && self.alphas[i] < self.c
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alphas[i1], self.alphas[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;
        let c = self.c;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if hi - lo <= 0.0 {
            return false;
        }
        let k11 = self.kernel.at(i1, i1);
        let k12 = self.kernel.at(i1, i2);
        let k22 = self.kernel.at(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;

        let mut a2_new = if eta > 0.0 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Objective is linear along the constraint line: pick the better end.
            let f1 = y1 * e1 - a1 * k11 - s * a2 * k12;
            let f2 = y2 * e2 - s * a1 * k12 - a2 * k22;
            let objective = |a2n: f64| {
                let a1n = a1 + s * (a2 - a2n);
                a1n * f1 + a2n * f2 + 0.5 * a1n * a1n * k11 + 0.5 * a2n * a2n * k22 + s * a2n * a1n * k12
            };
            let (obj_lo, obj_hi) = (objective(lo), objective(hi));
            if obj_lo < obj_hi - STEP_EPS {
                lo
            } else if obj_lo > obj_hi + STEP_EPS {
                hi
            } else {
                a2
            }
        };
        if a2_new < BOUND_EPS {
            a2_new = 0.0;
        } else if a2_new > c - BOUND_EPS {
            a2_new = c;
        }
        if (a2_new - a2).abs() < STEP_EPS * (a2_new + a2 + STEP_EPS) {
            return false;
        }
        let mut a1_new = a1 + s * (a2 - a2_new);
        if a1_new < BOUND_EPS {
            a1_new = 0.0;
        } else if a1_new > c - BOUND_EPS {
            a1_new = c;
        }

        let d1 = y1 * (a1_new - a1);
        let d2 = y2 * (a2_new - a2);
        let b1 = self.bias - e1 - d1 * k11 - d2 * k12;
        let b2 = self.bias - e2 - d1 * k12 - d2 * k22;
        let b_new = if a1_new > 0.0 && a1_new < c {
            b1
        } else if a2_new > 0.0 && a2_new < c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = b_new - self.bias;
        for k in 0..self.n() {
            self.errors[k] += d1 * self.kernel.at(i1, k) + d2 * self.kernel.at(i2, k) + db;
        }
        self.alphas[i1] = a1_new;
        self.alphas[i2] = a2_new;
        self.bias = b_new;
        self.steps += 1;
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        let r2 = self.errors[i2] * self.y[i2];
        let a2 = self.alphas[i2];
        if !((r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0)) {
            return false;
        }
        let n = self.n();
        let e2 = self.errors[i2];
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| self.non_bound(i)) {
            let gap = (self.errors[i] - e2).abs();
            if best.is_none_or(|(_, g)| gap > g) {
                best = Some((i, gap));
            }
        }
        if let Some((i1, _)) = best {
            if self.take_step(i1, i2) {
                return true;
            }
        }
        let start = self.sweep % n.max(1);
        for off in 0..n {
            let i1 = (start + off) % n;
            if self.non_bound(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        for off in 0..n {
            let i1 = (start + off) % n;
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    /// Re-derives the bias from the current multipliers: the mean implied by
    /// free samples, or the middle of the interval allowed by bound samples
    /// when none are free. Returns whether it moved.
    fn refit_bias(&mut self) -> bool {
        let n = self.n();
        // y_i - g_i, where g_i is the decision value without bias.
        let implied = |s: &Self, i: usize| s.y[i] - (s.errors[i] + s.y[i] - s.bias);
        let free: Vec<usize> = (0..n).filter(|&i| self.non_bound(i)).collect();
        let b = if free.is_empty() {
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..n {
                let edge = implied(self, i);
                if (self.alphas[i] <= 0.0) == (self.y[i] > 0.0) {
                    lo = lo.max(edge);
                } else {
                    hi = hi.min(edge);
                }
            }
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo,
                (false, true) => hi,
                (false, false) => self.bias,
            }
        } else {
            free.iter().map(|&i| implied(self, i)).sum::<f64>() / free.len() as f64
        };
        let db = b - self.bias;
        if db.abs() <= STEP_EPS {
            return false;
        }
        for e in &mut self.errors {
            *e += db;
        }
        self.bias = b;
        true
    }

    fn run(&mut self, max_passes: usize) -> bool {
        let mut examine_all = true;
        let mut quiet_passes = 0;
        loop {
            let mut changed = 0usize;
            for i in 0..self.n() {
                if self.steps >= self.max_steps {
                    return false;
                }
                if (examine_all || self.non_bound(i)) && self.examine(i) {
                    changed += 1;
                }
            }
            self.sweep += 1;
            if examine_all {
                if changed == 0 && self.refit_bias() {
                    quiet_passes = 0;
                } else if changed == 0 {
                    quiet_passes += 1;
                    if quiet_passes >= max_passes {
                        return true;
                    }
                } else {
                    quiet_passes = 0;
                    examine_all = false;
                }
            } else if changed == 0 {
                examine_all = true;
            }
        }
    }
}

/// Solves the soft-margin dual for labels in `{-1, +1}`.
pub fn solve_smo(rows: &[Vec<f64>], y: &[f64], gamma: f64, cfg: &SvmConfig) -> Result<SmoSolution, SvmError> {
    cfg.validate()?;
    check_dims(rows)?;
    if rows.len() != y.len() {
        return Err(SvmError::LabelCount { samples: rows.len(), labels: y.len() });
    }
    if let Some(&bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(SvmError::BadBinaryLabel(bad));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(SvmError::SingleClass);
    }
    let n = rows.len();
    let mut solver = Solver {
        kernel: Kernel::new(rows, gamma),
        y,
        c: cfg.c,
        tol: cfg.tolerance,
        alphas: vec![0.0; n],
        errors: y.iter().map(|v| -v).collect(),
        bias: 0.0,
        steps: 0,
        max_steps: cfg.max_iterations,
        sweep: 0,
    };
    let converged = solver.run(cfg.max_passes);
    Ok(SmoSolution { alphas: solver.alphas, bias: solver.bias, gamma, converged, steps: solver.steps })
}

/// Trains a binary machine, resolving gamma from `rows`. Samples with a zero
/// multiplier are dropped from the model.
pub fn train_binary_smo(rows: &[Vec<f64>], y: &[f64], cfg: &SvmConfig) -> Result<BinarySvm, SvmError> {
    let gamma = resolve_gamma(rows, cfg)?;
    train_binary_with_gamma(rows, y, gamma, cfg)
}

pub(crate) fn train_binary_with_gamma(
    rows: &[Vec<f64>],
    y: &[f64],
    gamma: f64,
    cfg: &SvmConfig,
) -> Result<BinarySvm, SvmError> {
    let sol = solve_smo(rows, y, gamma, cfg)?;
    if !sol.converged {
        tracing::warn!(steps = sol.steps, "SMO stopped at the iteration cap before converging");
    }
    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for (i, &a) in sol.alphas.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(rows[i].clone());
            dual_coefs.push(a * y[i]);
        }
    }
    Ok(BinarySvm { support_vectors, dual_coefs, bias: sol.bias, gamma, converged: sol.converged })
}

/// Largest KKT violation of a solution: `y_i f(x_i) >= 1` at zero
/// multipliers, `= 1` for free ones, `<= 1` at the box bound.
pub fn kkt_residual(rows: &[Vec<f64>], y: &[f64], sol: &SmoSolution, c: f64) -> f64 {
    let f = |x: &[f64]| {
        rows.iter()
            .zip(y)
            .zip(&sol.alphas)
            .map(|((r, yi), a)| a * yi * rbf_kernel(r, x, sol.gamma).expect("same dims"))
            .sum::<f64>()
            + sol.bias
    };
    rows.iter()
        .zip(y)
        .zip(&sol.alphas)
        .map(|((x, yi), &a)| {
            let margin = yi * f(x) - 1.0;
            if a <= 0.0 {
                (-margin).max(0.0)
            } else if a >= c {
                margin.max(0.0)
            } else {
                margin.abs()
            }
        })
        .fold(0.0, f64::max)
}
