//! Property tests for the invariants each module promises.

mod common;

use std::collections::BTreeMap;

use luq::density::{em_fit, ClassConditionalGmm, ConditionalFlow, CovarianceMode, EmOptions, FlowArch, Gmm};
use luq::engine::{score_classification, scores_from_log_joint};
use luq::io::{decode_matrix, encode_matrix, format_float};
use luq::linalg::{cholesky, logsumexp, pca_fit, sample_covariance, Matrix};
use luq::metrics::{auroc, discrete_entropy, ScoredBinarySet};
use luq::priors::{fit_categorical, OutputPrior};
use luq::FeatureMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use common::{random_distribution, rng, trapezoid};

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    let data = (0..rows * cols).map(|_| StandardNormal.sample(&mut r)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

fn random_spd(d: usize, seed: u64) -> Matrix {
    let a = gaussian_matrix(d, d, seed);
    let mut m = a.matmul(&a.transpose()).unwrap();
    for i in 0..d {
        m[(i, i)] += 0.1;
    }
    m
}

fn perturbed_flow(dim: usize, seed: u64, scale: f64) -> ConditionalFlow {
    let arch = FlowArch {
        n_layers: 3,
        hidden: 8,
        hidden_layers: 2,
        cond_features: 3,
        scale_clamp: 2.0,
    };
    let mut r = rng(seed);
    let mut flow = ConditionalFlow::new(dim, 2, &arch, &mut r).unwrap();
    for i in 0..flow.param_count() {
        let noise: f64 = StandardNormal.sample(&mut r);
        flow.set_param(i, flow.param(i) + scale * noise);
    }
    flow
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cholesky_reconstructs(d in 1usize..=16, seed in any::<u64>()) {
        let m = random_spd(d, seed);
        let l = cholesky(&m).unwrap();
        let mut diff = l.reconstruct();
        for (x, y) in diff.data_mut().iter_mut().zip(m.data()) {
            *x -= y;
        }
        prop_assert!(diff.frobenius_norm() / m.frobenius_norm() < 1e-8);
    }

    #[test]
    fn logsumexp_shift(v in prop::collection::vec(-50.0f64..50.0, 1..20), c in -1e3f64..1e3) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let lhs = logsumexp(&shifted).unwrap();
        let rhs = logsumexp(&v).unwrap() + c;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn pca_spectrum(n in 6usize..40, d in 1usize..6, seed in any::<u64>()) {
        let x = FeatureMatrix::new(gaussian_matrix(n, d, seed)).unwrap();
        let p = pca_fit(&x, d, false).unwrap();
        for w in p.eigenvalues.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        let mean: Vec<f64> = x.matrix().column_sums().iter().map(|s| s / n as f64).collect();
        let cov = sample_covariance(x.matrix(), &mean);
        let trace: f64 = (0..d).map(|i| cov[(i, i)]).sum();
        let total: f64 = p.eigenvalues.iter().sum();
        prop_assert!((total - trace).abs() < 1e-8 * (1.0 + trace));
    }

    #[test]
    fn pca_projection_order(n in 4usize..30, d in 2usize..5, seed in any::<u64>()) {
        let x = FeatureMatrix::new(gaussian_matrix(n, d, seed)).unwrap();
        let p = pca_fit(&x, d, false).unwrap();
        let y = p.transform(&x).unwrap();
        for j in 0..d {
            let col: Vec<f64> = (0..d).map(|i| p.basis[(i, j)]).collect();
            let biggest = col.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            prop_assert!(biggest > 0.0);
            let proj: Vec<f64> = (0..n)
                .map(|r| (0..d).map(|i| (x.matrix()[(r, i)] - p.mean[i]) * col[i]).sum())
                .collect();
            let mut a: Vec<usize> = (0..n).collect();
            let mut b = a.clone();
            a.sort_by(|&i, &k| proj[i].total_cmp(&proj[k]).then(i.cmp(&k)));
            b.sort_by(|&i, &k| y.matrix()[(i, j)].total_cmp(&y.matrix()[(k, j)]).then(i.cmp(&k)));
            for (&i, &k) in a.iter().zip(&b) {
                prop_assert!(i == k || (proj[i] - proj[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flow_inverts(dim in 1usize..5, seed in any::<u64>()) {
        let flow = perturbed_flow(dim, seed, 0.3);
        let z = gaussian_matrix(16, dim, seed ^ 1);
        let c = gaussian_matrix(16, 2, seed ^ 2);
        let (y, ld_f) = flow.forward(&z, &c).unwrap();
        let (back, ld_i) = flow.inverse(&y, &c).unwrap();
        let err = back.data().iter().zip(z.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9, "round trip error {err}");
        for (f, i) in ld_f.iter().zip(&ld_i) {
            prop_assert!((f + i).abs() < 1e-10);
        }
    }

    #[test]
    fn auroc_symmetry_and_rank_invariance(
        scores in prop::collection::vec(-5.0f64..5.0, 2..40),
        flips in prop::collection::vec(any::<bool>(), 40),
    ) {
        let mut labels: Vec<bool> = flips[..scores.len()].to_vec();
        labels[0] = true;
        labels[1] = false;
        let a = auroc(&ScoredBinarySet::new(scores.clone(), labels.clone()).unwrap()).unwrap();
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let b = auroc(&ScoredBinarySet::new(neg, labels.clone()).unwrap()).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12);
        let warped: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 + s.powi(3)).collect();
        let w = auroc(&ScoredBinarySet::new(warped, labels).unwrap()).unwrap();
        prop_assert!((a - w).abs() < 1e-12);
    }

    #[test]
    fn entropy_peaks_at_uniform(k in 2usize..10, seed in any::<u64>()) {
        let uniform = vec![1.0 / k as f64; k];
        let top = discrete_entropy(&uniform).unwrap();
        prop_assert!((top - (k as f64).ln()).abs() < 1e-12);
        let mut r = rng(seed);
        for _ in 0..10 {
            let p = random_distribution(&mut r, k);
            prop_assert!(discrete_entropy(&p).unwrap() <= top + 1e-12);
        }
    }

    #[test]
    fn categorical_mass_sums_to_one(labels in prop::collection::vec(0u32..6, 1..60), extra in 0u32..3) {
        let mut declared: Vec<u32> = (0..6 + extra).collect();
        declared.dedup();
        let prior = fit_categorical(&labels, Some(&declared), 1.0).unwrap();
        let total: f64 = declared.iter().map(|&c| prior.log_mass(c).unwrap().exp()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classification_scores_shift_and_match_dense_sums(
        k in 1usize..=5,
        d in 1usize..=3,
        seed in any::<u64>(),
        shift in -30.0f64..30.0,
    ) {
        let mut r = rng(seed);
        let mut per_class = BTreeMap::new();
        for class in 0..k as u32 {
            let mean: Vec<f64> = (0..d).map(|_| r.random_range(-3.0..3.0)).collect();
            let cov = random_spd(d, seed.wrapping_add(class as u64 + 1));
            per_class.insert(class, Gmm::gaussian(mean, &cov).unwrap());
        }
        let probs: Vec<f64> = random_distribution(&mut r, k).iter().map(|p| p + 0.01).collect();
        let total: f64 = probs.iter().sum();
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let prior = OutputPrior::categorical((0..k as u32).collect(), &probs).unwrap();
        let model = ClassConditionalGmm::new(per_class.clone()).unwrap();
        let z: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
        let s = score_classification(&model, &prior, &z).unwrap();

        let joint: Vec<f64> = (0..k)
            .map(|c| per_class[&(c as u32)].log_prob(&z).unwrap().exp() * probs[c])
            .collect();
        let evidence: f64 = joint.iter().sum();
        if evidence > 1e-200 {
            prop_assert!((s.epistemic + evidence.ln()).abs() < 1e-10 * (1.0 + s.epistemic.abs()));
            let post: Vec<f64> = joint.iter().map(|j| j / evidence).collect();
            prop_assert!((s.aleatoric - common::entropy(&post)).abs() < 1e-10);
        }
        prop_assert!(s.aleatoric >= -1e-15 && s.aleatoric <= (k as f64).ln() + 1e-12);

        let log_joint: Vec<f64> = (0..k)
            .map(|c| per_class[&(c as u32)].log_prob(&z).unwrap() + probs[c].ln())
            .collect();
        let moved: Vec<f64> = log_joint.iter().map(|v| v + shift).collect();
        let (e0, a0, _) = scores_from_log_joint(&log_joint).unwrap();
        let (e1, a1, _) = scores_from_log_joint(&moved).unwrap();
        prop_assert!((a1 - a0).abs() < 1e-12);
        prop_assert!((e1 - (e0 - shift)).abs() < 1e-12 * (1.0 + e0.abs() + shift.abs()));
    }

    #[test]
    fn matrix_file_round_trip(rows in 0usize..12, cols in 0usize..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let data: Vec<f64> = (0..rows * cols).map(|_| f64::from_bits(r.random::<u64>() >> 2)).collect();
        let m = Matrix::from_vec(rows, cols, data).unwrap();
        let bytes = encode_matrix(&m).unwrap();
        let back = decode_matrix(&bytes, "m.luq").unwrap();
        prop_assert_eq!(back.rows(), rows);
        prop_assert_eq!(back.cols(), cols);
        for (a, b) in back.data().iter().zip(m.data()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(encode_matrix(&back).unwrap(), bytes);
    }

    #[test]
    fn csv_floats_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let s = format_float(v);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        prop_assert!(!s.contains(','));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn em_never_loses_likelihood(n in 20usize..200, d in 1usize..4, k in 1usize..4, seed in any::<u64>(), tied in any::<bool>()) {
        let x = FeatureMatrix::new(gaussian_matrix(n, d, seed)).unwrap();
        let opts = EmOptions {
            n_components: k,
            max_iter: 60,
            tol: 1e-10,
            cov_reg: 1e-6,
            covariance_mode: if tied { CovarianceMode::TiedAcrossComponents } else { CovarianceMode::FullPerComponent },
            seed,
        };
        let fit = em_fit(&x, &opts).unwrap();
        let mut start = 0;
        for &r in fit.reseeded_at.iter().chain(std::iter::once(&fit.log_likelihood.len())) {
            for w in fit.log_likelihood[start..r].windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-8, "{} -> {}", w[0], w[1]);
            }
            start = r;
        }
        if tied {
            let first = fit.model.components()[0].cov_chol.lower().clone();
            for c in fit.model.components() {
                prop_assert_eq!(c.cov_chol.lower(), &first);
            }
        }
    }

    #[test]
    fn mixtures_integrate_to_one(k in 1usize..4, seed in any::<u64>()) {
        let mut r = rng(seed);
        let data: Vec<f64> = (0..200).map(|i| {
            let centre = (i % k) as f64 * 3.0;
            let e: f64 = StandardNormal.sample(&mut r);
            centre + e * 0.7
        }).collect();
        let x = FeatureMatrix::new(Matrix::from_vec(200, 1, data).unwrap()).unwrap();
        let fit = em_fit(&x, &EmOptions { n_components: k, seed, ..EmOptions::default() }).unwrap();
        let g = &fit.model;
        let mass = trapezoid(|z| g.log_prob(&[z]).unwrap().exp(), -15.0, 25.0, 8001);
        prop_assert!((mass - 1.0).abs() < 1e-3, "1-D mass {mass}");

        let pts = gaussian_matrix(150, 2, seed ^ 7);
        let x2 = FeatureMatrix::new(pts).unwrap();
        let fit2 = em_fit(&x2, &EmOptions { n_components: k, seed, ..EmOptions::default() }).unwrap();
        let g2 = &fit2.model;
        let inner = |a: f64| trapezoid(|b| g2.log_prob(&[a, b]).unwrap().exp(), -12.0, 12.0, 481);
        let mass2 = trapezoid(inner, -12.0, 12.0, 481);
        prop_assert!((mass2 - 1.0).abs() < 1e-3, "2-D mass {mass2}");
    }
}

#[test]
fn continuous_priors_integrate_to_one() {
    let priors = [
        OutputPrior::uniform(-10.0, 10.0).unwrap(),
        OutputPrior::beta_prime(1.0, 1.0).unwrap(),
        OutputPrior::beta_prime(31.76, 3.07).unwrap(),
        OutputPrior::beta_prime(2.5, 4.0).unwrap(),
        luq::priors::fit_histogram(&[0.1, 0.5, 0.7, 1.2, 3.0, 3.1, 2.2], 5).unwrap(),
    ];
    for p in &priors {
        let f = |y: f64| p.log_density(y).map(f64::exp).unwrap_or(0.0);
        let mass = match *p {
            // y = u / (1 − u) maps (0, ∞) onto (0, 1)
            OutputPrior::BetaPrime { .. } => trapezoid(
                |u: f64| f(u / (1.0 - u)) / (1.0 - u).powi(2),
                1e-12,
                1.0 - 1e-9,
                1_000_001,
            ),
            _ => {
                let (lo, hi) = p.support().unwrap();
                trapezoid(f, lo, hi, 400_001)
            }
        };
        assert!((mass - 1.0).abs() < 1e-3, "{p:?}: {mass}");
    }
}

#[test]
fn priors_finite_inside_support() {
    let mut r = rng(5);
    let priors = [
        OutputPrior::uniform(-2.0, 3.0).unwrap(),
        OutputPrior::beta_prime(0.7, 1.5).unwrap(),
        luq::priors::fit_histogram(&[1.0, 2.0, 2.5, 9.0], 4).unwrap(),
    ];
    for p in &priors {
        let (lo, hi) = p.support().unwrap_or((0.0, 50.0));
        let hi = if hi.is_finite() { hi } else { 50.0 };
        for _ in 0..1000 {
            let y = r.random_range(lo..hi);
            if y > lo {
                assert!(p.log_density(y).unwrap().is_finite(), "{p:?} at {y}");
            }
        }
    }
}
