//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use lamper::prompt::{render_chunked, PromptKind, RenderConfig};
use lamper::TokenCounter;
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;

/// Defining formulas evaluated directly: plain sums, a sort for the median,
/// and a second pass for the variance.
pub fn two_pass_features(x: &[f64]) -> [f64; 10] {
    let n = x.len() as f64;
    let sum: f64 = x.iter().sum();
    let mean = sum / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = s.len();
    let median = if m % 2 == 1 { s[m / 2] } else { (s[m / 2 - 1] + s[m / 2]) / 2.0 };
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let max = s[m - 1];
    let min = s[0];
    [sum, median, mean, n, var.sqrt(), var, rms, max, max.abs().max(min.abs()), min]
}

/// Exact decimal rounding of the value's shortest round-trip digits,
/// half to even, using big integers.
pub fn bigint_fixed(x: f64, precision: u32) -> String {
    let shortest = format!("{:e}", x.abs());
    let (mantissa, exp) = shortest.split_once('e').unwrap();
    let exp: i64 = exp.parse().unwrap();
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits: BigInt = format!("{int_part}{frac_part}").parse().unwrap();
    // value = digits * 10^(exp - frac_len); scale to units of 10^-precision.
    let shift = exp - frac_part.len() as i64 + precision as i64;
    let ten = BigInt::from(10);
    let units = if shift >= 0 {
        digits * ten.pow(shift as u32)
    } else {
        let div = ten.pow((-shift) as u32);
        let q = &digits / &div;
        let r = &digits % &div;
        let twice = r * 2;
        if twice > div || (twice == div && &q % 2 == BigInt::from(1)) {
            q + 1
        } else {
            q
        }
    };
    let mut text = units.to_string();
    let p = precision as usize;
    if text.len() <= p {
        text = format!("{}{text}", "0".repeat(p + 1 - text.len()));
    }
    let (i, f) = text.split_at(text.len() - p);
    let body = if p == 0 { i.to_string() } else { format!("{i}.{f}") };
    let is_zero = units_is_zero(&body);
    if x < 0.0 && !is_zero {
        format!("-{body}")
    } else {
        body
    }
}

fn units_is_zero(body: &str) -> bool {
    body.chars().all(|c| c == '0' || c == '.')
}

/// Largest chunk length whose every rendered chunk fits, by trying all.
pub fn linear_scan_chunk_len<C: TokenCounter + ?Sized>(
    values: &[f64],
    kind: PromptKind,
    cfg: &RenderConfig,
    budget: usize,
    counter: &C,
) -> Option<usize> {
    (1..=values.len()).rev().find(|&len| {
        render_chunked(values, kind, cfg, len)
            .unwrap()
            .iter()
            .all(|p| counter.count_tokens(&p.text).unwrap() <= budget)
    })
}

/// Exact soft-margin dual solution found by enumerating every assignment of
/// each multiplier to {0, C, free} and solving the resulting linear KKT
/// system. Returns `(alphas, bias)`.
pub fn dense_qp_oracle(rows: &[Vec<f64>], y: &[f64], gamma: f64, c: f64) -> (Vec<f64>, f64) {
    let n = rows.len();
    let k = |i: usize, j: usize| -> f64 {
        let d: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        (-gamma * d).exp()
    };
    let kmat: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| k(i, j)).collect()).collect();
    let eps = 1e-9;
    let mut state = vec![0u8; n];
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut c2 = code;
        for s in state.iter_mut() {
            *s = (c2 % 3) as u8;
            c2 /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let bias = if free.is_empty() {
            if alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() > eps {
                continue;
            }
            // Any bias within the bound-derived interval is optimal.
            let g: Vec<f64> = (0..n).map(|i| (0..n).map(|j| alpha[j] * y[j] * kmat[i][j]).sum()).collect();
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..n {
                // alpha=0 needs y(g+b) >= 1; alpha=C needs y(g+b) <= 1.
                let at_zero = state[i] == 0;
                let b_edge = y[i] - g[i];
                let lower = (at_zero && y[i] > 0.0) || (!at_zero && y[i] < 0.0);
                if lower {
                    lo = lo.max(b_edge);
                } else {
                    hi = hi.min(b_edge);
                }
            }
            if lo > hi + eps {
                continue;
            }
            if lo.is_finite() && hi.is_finite() {
                (lo + hi) / 2.0
            } else if lo.is_finite() {
                lo
            } else if hi.is_finite() {
                hi
            } else {
                0.0
            }
        } else {
            let m = free.len();
            let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
            let mut rhs = DVector::<f64>::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    a[(r, cc)] = y[i] * y[j] * kmat[i][j];
                }
                a[(r, m)] = y[i];
                a[(m, r)] = y[i];
                let bound: f64 = (0..n).filter(|&j| state[j] == 1).map(|j| y[i] * y[j] * kmat[i][j] * c).sum();
                rhs[r] = 1.0 - bound;
            }
            rhs[m] = -(0..n).filter(|&j| state[j] == 1).map(|j| y[j] * c).sum::<f64>();
            let Some(sol) = a.lu().solve(&rhs) else { continue };
            if free.iter().enumerate().any(|(r, _)| !(sol[r] > -eps && sol[r] < c + eps)) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, c);
            }
            sol[m]
        };
        let f = |i: usize| (0..n).map(|j| alpha[j] * y[j] * kmat[i][j]).sum::<f64>() + bias;
        let ok = (0..n).all(|i| {
            let margin = y[i] * f(i);
            match state[i] {
                0 => margin >= 1.0 - 1e-7,
                1 => margin <= 1.0 + 1e-7,
                _ => true,
            }
        });
        // A KKT point of a convex QP is optimal.
        if ok {
            return (alpha, bias);
        }
    }
    panic!("no KKT point found; a convex QP always has one")
}

pub fn oracle_decision(rows: &[Vec<f64>], y: &[f64], alpha: &[f64], bias: f64, gamma: f64, x: &[f64]) -> f64 {
    rows.iter()
        .zip(y)
        .zip(alpha)
        .map(|((r, yi), a)| {
            let d: f64 = r.iter().zip(x).map(|(p, q)| (p - q) * (p - q)).sum();
            a * yi * (-gamma * d).exp()
        })
        .sum::<f64>()
        + bias
}

/// Path of the bundled synthetic datasets.
pub fn synthetic_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

/// Copies `src` dataset directories into a fresh root under `dst`.
pub fn copy_datasets(src: &Path, dst: &Path, names: &[&str]) {
    for name in names {
        let to = dst.join(name);
        std::fs::create_dir_all(&to).unwrap();
        for split in ["TRAIN", "TEST"] {
            let file = format!("{name}_{split}.tsv");
            std::fs::copy(src.join(name).join(&file), to.join(&file)).unwrap();
        }
    }
}
