//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code under test except for plain data types.

#![allow(dead_code)]

use std::f64::consts::PI;

use luq::engine::ConditionalDensity;
use luq::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_log_pdf(x: f64, mean: f64, sigma: f64) -> f64 {
    let u = (x - mean) / sigma;
    -0.5 * u * u - sigma.ln() - 0.5 * (2.0 * PI).ln()
}

/// `z | y ~ N(y, σ²)` in one dimension.
pub struct GaussianShift {
    pub sigma: f64,
}

impl ConditionalDensity for GaussianShift {
    fn dim(&self) -> usize {
        1
    }

    fn log_prob_conditions(&self, z: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
        Ok(ys.iter().map(|&y| normal_log_pdf(z[0], y, self.sigma)).collect())
    }
}

/// AUROC as the fraction of (positive, negative) pairs ranked correctly,
/// ties counting one half.
pub fn brute_auroc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut credit = 0.0;
    for &p in pos {
        for &n in neg {
            credit += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    credit / (pos.len() * neg.len()) as f64
}

/// Every distinct score as a `>=` threshold, from high to low, plus one above
/// the maximum; returns (tp, fp) at each.
fn threshold_counts(pos: &[f64], neg: &[f64]) -> Vec<(usize, usize)> {
    let mut cuts: Vec<f64> = pos.iter().chain(neg).copied().collect();
    cuts.sort_by(|a, b| b.total_cmp(a));
    cuts.dedup();
    let mut out = vec![(0, 0)];
    for t in cuts {
        let tp = pos.iter().filter(|&&s| s >= t).count();
        let fp = neg.iter().filter(|&&s| s >= t).count();
        out.push((tp, fp));
    }
    out
}

/// Step-wise average precision: precision at each threshold times the recall
/// gained there.
pub fn brute_average_precision(pos: &[f64], neg: &[f64]) -> f64 {
    let counts = threshold_counts(pos, neg);
    let p = pos.len() as f64;
    let mut ap = 0.0;
    for w in counts.windows(2) {
        let (tp0, _) = w[0];
        let (tp1, fp1) = w[1];
        if tp1 > tp0 {
            ap += (tp1 - tp0) as f64 / p * tp1 as f64 / (tp1 + fp1) as f64;
        }
    }
    ap
}

/// Lowest FPR over all thresholds whose TPR reaches `target`.
pub fn brute_fpr_at_tpr(pos: &[f64], neg: &[f64], target: f64) -> f64 {
    threshold_counts(pos, neg)
        .into_iter()
        .filter(|&(tp, _)| tp as f64 / pos.len() as f64 >= target)
        .map(|(_, fp)| fp as f64 / neg.len() as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Plain `Σ p ln(1/p)`.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

/// Random probability vector of length `k`, some entries possibly zero.
pub fn random_distribution<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k)
        .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random::<f64>() })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Trapezoid integral of `f` over `[lo, hi]` with `n` points.
pub fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            w * f(lo + h * i as f64)
        })
        .sum::<f64>()
        * h
}

/// Spearman rank correlation without ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}
