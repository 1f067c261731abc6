//! Gaussian mixtures fitted by expectation maximization, and the per-class
//! bundle that models `p(z | ŷ)` for discrete predictions.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{
    cholesky, column_means, logsumexp_unchecked, sample_covariance, CholeskyFactor, Matrix,
};

/// Responsibility mass below which a component counts as collapsed.
const MIN_COMPONENT_MASS: f64 = 1e-10;
/// A component may be re-seeded this many times before the fit fails.
const MAX_RESEEDS: usize = 2;

pub type ClassId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceMode {
    FullPerComponent,
    TiedAcrossComponents,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmOptions {
    pub n_components: usize,
    pub max_iter: usize,
    /// Relative change of the mean log-likelihood that counts as converged.
    pub tol: f64,
    /// Added to every covariance diagonal.
    pub cov_reg: f64,
    pub covariance_mode: CovarianceMode,
    pub seed: u64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            n_components: 1,
            max_iter: 200,
            tol: 1e-6,
            cov_reg: 1e-6,
            covariance_mode: CovarianceMode::FullPerComponent,
            seed: 0,
        }
    }
}

impl EmOptions {
    fn validate(&self) -> Result<()> {
        if self.n_components == 0 {
            return Err(Error::InvalidArgument("n_components must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        if !(self.cov_reg >= 0.0) {
            return Err(Error::InvalidArgument("cov_reg must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub log_weight: f64,
    pub mean: Vec<f64>,
    pub cov_chol: CholeskyFactor,
}

impl GaussianComponent {
    /// `log w − ½·d·log 2π − ½·log det Σ`.
    fn log_normalizer(&self) -> f64 {
        let d = self.mean.len() as f64;
        self.log_weight - 0.5 * d * (2.0 * PI).ln() - 0.5 * self.cov_chol.log_det()
    }

    fn weighted_log_density(&self, normalizer: f64, z: &[f64], buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.extend(z.iter().zip(&self.mean).map(|(a, m)| a - m));
        self.cov_chol.solve_lower_inplace(buf);
        normalizer - 0.5 * buf.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Weighted sum of multivariate Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct Gmm {
    dim: usize,
    components: Vec<GaussianComponent>,
}

impl Gmm {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        let first = components.first().ok_or(Error::EmptyInput)?;
        let dim = first.mean.len();
        for c in &components {
            if c.mean.len() != dim || c.cov_chol.dim() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: c.mean.len(),
                });
            }
        }
        let lw: Vec<f64> = components.iter().map(|c| c.log_weight).collect();
        let total = logsumexp_unchecked(&lw);
        if (total).abs() > 1e-9 || lw.iter().any(|&w| w > 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "mixture log-weights must normalize (logsumexp = {total})"
            )));
        }
        Ok(Self { dim, components })
    }

    /// Single Gaussian with the given mean and covariance.
    pub fn gaussian(mean: Vec<f64>, cov: &Matrix) -> Result<Self> {
        Self::new(vec![GaussianComponent {
            log_weight: 0.0,
            mean,
            cov_chol: cholesky(cov)?,
        }])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    /// True when every component shares one covariance factor.
    pub fn is_tied(&self) -> bool {
        self.components
            .windows(2)
            .all(|w| w[0].cov_chol == w[1].cov_chol)
    }

    pub fn log_prob(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        let mut buf = Vec::with_capacity(self.dim);
        let terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weighted_log_density(c.log_normalizer(), z, &mut buf))
            .collect();
        Ok(logsumexp_unchecked(&terms))
    }

    /// Log-density of every row of `x`.
    pub fn log_prob_rows(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: x.cols(),
            });
        }
        let (_, ll) = self.component_log_densities(x);
        Ok(ll)
    }

    /// Per-row, per-component weighted log densities and the per-row total.
    fn component_log_densities(&self, x: &Matrix) -> (Matrix, Vec<f64>) {
        let k = self.components.len();
        let norms: Vec<f64> = self.components.iter().map(|c| c.log_normalizer()).collect();
        let mut lp = Matrix::zeros(x.rows(), k);
        let mut ll = Vec::with_capacity(x.rows());
        let mut buf = Vec::with_capacity(self.dim);
        for i in 0..x.rows() {
            let row = x.row(i);
            let out = lp.row_mut(i);
            for (j, c) in self.components.iter().enumerate() {
                out[j] = c.weighted_log_density(norms[j], row, &mut buf);
            }
            ll.push(logsumexp_unchecked(out));
        }
        (lp, ll)
    }
}

/// Outcome of [`em_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub model: Gmm,
    /// Mean training log-likelihood of each accepted iterate, in order.
    pub log_likelihood: Vec<f64>,
    /// Indices into `log_likelihood` where a collapsed component was
    /// re-seeded; monotonicity holds between consecutive re-seeds.
    pub reseeded_at: Vec<usize>,
    pub converged: bool,
    /// An EM step lowered the likelihood (possible only through the
    /// covariance regularizer) and was rolled back.
    pub rolled_back: bool,
}

impl EmFit {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihood.last().expect("at least one iterate")
    }
}

/// Fits a mixture with `opts.n_components` components by EM.
///
/// Means are seeded k-means++ style from `opts.seed`; covariances start at the
/// global sample covariance plus `cov_reg`. Iteration stops when the relative
/// likelihood gain drops below `tol`, after `max_iter` M-steps, or when a step
/// would lower the likelihood (that step is discarded).
pub fn em_fit(data: &FeatureMatrix, opts: &EmOptions) -> Result<EmFit> {
    opts.validate()?;
    let x = data.matrix();
    let n = x.rows();
    let d = x.cols();
    let k = opts.n_components;
    if n < k || n == 0 {
        return Err(Error::TooFewSamples {
            needed: k.max(1),
            got: n,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let global_mean = column_means(x);
    let mut global_cov = sample_covariance(x, &global_mean);
    add_diagonal(&mut global_cov, opts.cov_reg);
    let global_chol = cholesky(&global_cov)?;

    let means = kmeans_pp_seeds(x, k, &mut rng);
    let log_w = -(k as f64).ln();
    let components = means
        .into_iter()
        .map(|mean| GaussianComponent {
            log_weight: log_w,
            mean,
            cov_chol: global_chol.clone(),
        })
        .collect();
    let mut model = Gmm { dim: d, components };

    let mut history: Vec<f64> = Vec::new();
    let mut reseeded_at = Vec::new();
    let mut reseeds = vec![0usize; k];
    let mut previous: Option<Gmm> = None;
    let mut converged = false;
    let mut rolled_back = false;
    let mut fresh_segment = true;

    for _ in 0..opts.max_iter {
        let (lp, ll) = model.component_log_densities(x);
        let mean_ll = ll.iter().sum::<f64>() / n as f64;
        if !mean_ll.is_finite() {
            return Err(Error::Diverged {
                epoch: history.len(),
            });
        }
        if let (Some(&prev), false) = (history.last(), fresh_segment) {
            if mean_ll < prev {
                model = previous.take().expect("previous iterate kept");
                rolled_back = true;
                converged = true;
                break;
            }
            if (mean_ll - prev) / prev.abs().max(1e-300) < opts.tol {
                history.push(mean_ll);
                converged = true;
                break;
            }
        }
        history.push(mean_ll);
        fresh_segment = false;

        let resp = responsibilities(&lp, &ll);
        let (next, collapsed) = m_step(x, &resp, &ll, opts, &global_chol, &mut reseeds)?;
        if collapsed {
            reseeded_at.push(history.len());
            fresh_segment = true;
        }
        previous = Some(std::mem::replace(&mut model, next));
    }

    if !converged {
        // score the last M-step so the history ends at the returned model
        let ll = model.log_prob_rows(x)?;
        let mean_ll = ll.iter().sum::<f64>() / n as f64;
        match history.last() {
            Some(&prev) if mean_ll < prev && !fresh_segment => {
                model = previous.take().expect("previous iterate kept");
                rolled_back = true;
            }
            _ => history.push(mean_ll),
        }
    }

    Ok(EmFit {
        model,
        log_likelihood: history,
        reseeded_at,
        converged,
        rolled_back,
    })
}

fn responsibilities(lp: &Matrix, ll: &[f64]) -> Matrix {
    let mut r = lp.clone();
    for (i, &total) in ll.iter().enumerate() {
        for v in r.row_mut(i) {
            *v = (*v - total).exp();
        }
    }
    r
}

fn m_step(
    x: &Matrix,
    resp: &Matrix,
    ll: &[f64],
    opts: &EmOptions,
    global_chol: &CholeskyFactor,
    reseeds: &mut [usize],
) -> Result<(Gmm, bool)> {
    let n = x.rows();
    let d = x.cols();
    let k = resp.cols();
    let mass = resp.column_sums();

    let mut collapsed = false;
    let mut means = Vec::with_capacity(k);
    let mut covs = Vec::with_capacity(k);
    let mut tied = Matrix::zeros(d, d);
    // rows ordered from least to most likely, used as re-seed candidates
    let mut far: Vec<usize> = (0..n).collect();
    far.sort_by(|&a, &b| ll[a].total_cmp(&ll[b]));
    let mut far_iter = far.into_iter();

    for j in 0..k {
        if mass[j] < MIN_COMPONENT_MASS {
            reseeds[j] += 1;
            if reseeds[j] > MAX_RESEEDS {
                return Err(Error::DegenerateComponent { component: j });
            }
            warn!("EM: component {j} collapsed, re-seeding from the least likely sample");
            collapsed = true;
            let row = far_iter.next().unwrap_or(0);
            means.push(x.row(row).to_vec());
            covs.push(None);
            continue;
        }
        let mut mean = vec![0.0; d];
        for i in 0..n {
            let r = resp[(i, j)];
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += r * v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= mass[j]);

        let mut scatter = Matrix::zeros(d, d);
        let mut diff = vec![0.0; d];
        for i in 0..n {
            let r = resp[(i, j)];
            if r == 0.0 {
                continue;
            }
            for (t, (v, m)) in diff.iter_mut().zip(x.row(i).iter().zip(&mean)) {
                *t = v - m;
            }
            for a in 0..d {
                let ra = r * diff[a];
                let row = scatter.row_mut(a);
                for b in 0..=a {
                    row[b] += ra * diff[b];
                }
            }
        }
        match opts.covariance_mode {
            CovarianceMode::FullPerComponent => {
                let mut cov = scatter;
                finish_covariance(&mut cov, mass[j], opts.cov_reg);
                covs.push(Some(cov));
            }
            CovarianceMode::TiedAcrossComponents => {
                for (t, s) in tied.data_mut().iter_mut().zip(scatter.data()) {
                    *t += s;
                }
                covs.push(None);
            }
        }
        means.push(mean);
    }

    let total_mass: f64 = mass.iter().sum();
    let tied_chol = match opts.covariance_mode {
        CovarianceMode::TiedAcrossComponents => {
            finish_covariance(&mut tied, total_mass, opts.cov_reg);
            Some(cholesky(&tied)?)
        }
        CovarianceMode::FullPerComponent => None,
    };

    let mut log_weights: Vec<f64> = mass
        .iter()
        .map(|&m| {
            if m < MIN_COMPONENT_MASS {
                -(k as f64).ln()
            } else {
                (m / n as f64).ln()
            }
        })
        .collect();
    let norm = logsumexp_unchecked(&log_weights);
    log_weights.iter_mut().for_each(|w| *w -= norm);

    let mut components = Vec::with_capacity(k);
    for (j, (mean, cov)) in means.into_iter().zip(covs).enumerate() {
        let cov_chol = match (&tied_chol, cov) {
            (Some(t), _) => t.clone(),
            (None, Some(c)) => cholesky(&c)?,
            (None, None) => global_chol.clone(),
        };
        components.push(GaussianComponent {
            log_weight: log_weights[j],
            mean,
            cov_chol,
        });
    }
    Ok((Gmm { dim: d, components }, collapsed))
}

/// Scales the lower-triangular scatter by `1/mass`, mirrors it and adds the
/// regularizer to the diagonal.
fn finish_covariance(cov: &mut Matrix, mass: f64, reg: f64) {
    let d = cov.rows();
    for a in 0..d {
        for b in 0..=a {
            let v = cov[(a, b)] / mass;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
        cov[(a, a)] += reg;
    }
}

fn add_diagonal(m: &mut Matrix, v: f64) {
    for i in 0..m.rows() {
        m[(i, i)] += v;
    }
}

fn kmeans_pp_seeds(x: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = x.rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in dist.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // every row coincides with a chosen seed
            let unused: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            unused[rng.random_range(0..unused.len())]
        };
        chosen.push(next);
        for (i, dv) in dist.iter_mut().enumerate() {
            *dv = dv.min(sq_dist(x.row(i), x.row(next)));
        }
    }
    chosen.into_iter().map(|i| x.row(i).to_vec()).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One mixture per predicted class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassConditionalGmm {
    dim: usize,
    per_class: BTreeMap<ClassId, Gmm>,
}

/// What to do with classes that have fewer rows than `n_components`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmallClassPolicy {
    Fail,
    /// Use `max(1, count / 2)` components for that class and log a warning.
    Shrink,
}

impl ClassConditionalGmm {
    pub fn new(per_class: BTreeMap<ClassId, Gmm>) -> Result<Self> {
        let dim = per_class.values().next().ok_or(Error::EmptyInput)?.dim();
        if let Some(g) = per_class.values().find(|g| g.dim() != dim) {
            return Err(Error::DimMismatch {
                expected: dim,
                got: g.dim(),
            });
        }
        Ok(Self { dim, per_class })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Class ids in ascending order.
    pub fn classes(&self) -> Vec<ClassId> {
        self.per_class.keys().copied().collect()
    }

    pub fn get(&self, class: ClassId) -> Option<&Gmm> {
        self.per_class.get(&class)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &Gmm)> {
        self.per_class.iter().map(|(&c, g)| (c, g))
    }
}

/// Per-class fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassFitSummary {
    pub class: ClassId,
    pub count: usize,
    pub n_components: usize,
    pub final_log_likelihood: f64,
}

/// Fits one mixture on the rows predicted as each class; fails on classes
/// smaller than `opts.n_components`.
pub fn fit_class_conditional(
    features: &FeatureMatrix,
    predicted_labels: &[ClassId],
    opts: &EmOptions,
) -> Result<(ClassConditionalGmm, Vec<ClassFitSummary>)> {
    fit_class_conditional_with(features, predicted_labels, opts, SmallClassPolicy::Fail)
}

pub fn fit_class_conditional_with(
    features: &FeatureMatrix,
    predicted_labels: &[ClassId],
    opts: &EmOptions,
    policy: SmallClassPolicy,
) -> Result<(ClassConditionalGmm, Vec<ClassFitSummary>)> {
    if predicted_labels.len() != features.rows() {
        return Err(Error::DimMismatch {
            expected: features.rows(),
            got: predicted_labels.len(),
        });
    }
    if predicted_labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut rows: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
    for (i, &c) in predicted_labels.iter().enumerate() {
        rows.entry(c).or_default().push(i);
    }

    let mut per_class = BTreeMap::new();
    let mut summary = Vec::with_capacity(rows.len());
    for (class, idx) in rows {
        let count = idx.len();
        let mut class_opts = opts.clone();
        if count < opts.n_components {
            match policy {
                SmallClassPolicy::Fail => return Err(Error::ClassTooSmall { class, count }),
                SmallClassPolicy::Shrink => {
                    class_opts.n_components = (count / 2).max(1);
                    warn!(
                        "class {class} has {count} rows; using {} components instead of {}",
                        class_opts.n_components, opts.n_components
                    );
                }
            }
        }
        let subset = features.with_matrix(features.select_rows(&idx));
        let fit = em_fit(&subset, &class_opts)?;
        summary.push(ClassFitSummary {
            class,
            count,
            n_components: class_opts.n_components,
            final_log_likelihood: fit.final_log_likelihood(),
        });
        per_class.insert(class, fit.model);
    }
    Ok((ClassConditionalGmm::new(per_class)?, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, StandardNormal};

    fn features(rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn standard_normal_log_prob_at_origin() {
        let g = Gmm::gaussian(vec![0.0, 0.0], &Matrix::identity(2)).unwrap();
        assert_abs_diff_eq!(g.log_prob(&[0.0, 0.0]).unwrap(), -(2.0 * PI).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(g.log_prob(&[0.0, 0.0]).unwrap(), -1.837877, epsilon = 1e-6);
    }

    #[test]
    fn symmetric_two_component_mixture() {
        let half = 0.5_f64.ln();
        let unit = cholesky(&Matrix::identity(1)).unwrap();
        let g = Gmm::new(vec![
            GaussianComponent {
                log_weight: half,
                mean: vec![-1.0],
                cov_chol: unit.clone(),
            },
            GaussianComponent {
                log_weight: half,
                mean: vec![1.0],
                cov_chol: unit,
            },
        ])
        .unwrap();
        let analytic = -0.5 * (2.0 * PI).ln() - 0.5;
        assert_abs_diff_eq!(g.log_prob(&[0.0]).unwrap(), analytic, epsilon = 1e-12);
        assert_abs_diff_eq!(g.log_prob(&[0.0]).unwrap(), -1.418939, epsilon = 1e-6);
    }

    #[test]
    fn translation_invariance() {
        let cov = Matrix::from_rows(&[[2.0, 0.3], [0.3, 0.5]]).unwrap();
        let g = Gmm::gaussian(vec![0.5, -1.0], &cov).unwrap();
        let shifted = Gmm::gaussian(vec![3.5, 1.0], &cov).unwrap();
        let a = g.log_prob(&[0.1, 0.2]).unwrap();
        let b = shifted.log_prob(&[3.1, 2.2]).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn dim_mismatch_is_reported() {
        let g = Gmm::gaussian(vec![0.0, 0.0], &Matrix::identity(2)).unwrap();
        assert!(matches!(g.log_prob(&[0.0]), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn single_sample_fit() {
        let eps = 1e-3;
        let x = features(&[vec![1.5, -2.0]]);
        let opts = EmOptions {
            cov_reg: eps,
            ..Default::default()
        };
        let fit = em_fit(&x, &opts).unwrap();
        let c = &fit.model.components()[0];
        assert_eq!(c.mean, vec![1.5, -2.0]);
        let cov = c.cov_chol.reconstruct();
        assert_abs_diff_eq!(cov[(0, 0)], eps, epsilon = 1e-15);
        assert_abs_diff_eq!(cov[(1, 1)], eps, epsilon = 1e-15);
        assert_eq!(cov[(0, 1)], 0.0);
    }

    #[test]
    fn separated_clusters_recover_sample_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut rows = Vec::new();
        let mut left = Vec::new();
        let mut right = Vec::new();
        for i in 0..400 {
            let center = if i % 2 == 0 { -10.0 } else { 10.0 };
            let e: f64 = StandardNormal.sample(&mut rng);
            let v = center + e;
            if center < 0.0 { left.push(v) } else { right.push(v) }
            rows.push(vec![v]);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let opts = EmOptions {
            n_components: 2,
            ..Default::default()
        };
        let fit = em_fit(&features(&rows), &opts).unwrap();
        let mut means: Vec<f64> = fit.model.components().iter().map(|c| c.mean[0]).collect();
        means.sort_by(f64::total_cmp);
        assert!((means[0] - mean(&left)).abs() < 0.1);
        assert!((means[1] - mean(&right)).abs() < 0.1);
    }

    #[test]
    fn one_component_per_row_with_regularization() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
        let opts = EmOptions {
            n_components: 6,
            cov_reg: 1e-3,
            max_iter: 500,
            ..Default::default()
        };
        let fit = em_fit(&features(&rows), &opts).unwrap();
        assert!(fit.final_log_likelihood().is_finite());
        assert!(fit.reseeded_at.is_empty());
    }

    #[test]
    fn too_few_samples() {
        let x = features(&[vec![0.0], vec![1.0]]);
        let opts = EmOptions {
            n_components: 3,
            ..Default::default()
        };
        assert!(matches!(em_fit(&x, &opts), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn tied_mode_shares_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let c = if i % 2 == 0 { -3.0 } else { 3.0 };
                (0..2)
                    .map(|_| c + { let v: f64 = StandardNormal.sample(&mut rng); v })
                    .collect()
            })
            .collect();
        let opts = EmOptions {
            n_components: 2,
            covariance_mode: CovarianceMode::TiedAcrossComponents,
            ..Default::default()
        };
        let fit = em_fit(&features(&rows), &opts).unwrap();
        assert!(fit.model.is_tied());
        let full = em_fit(
            &features(&rows),
            &EmOptions {
                n_components: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!full.model.is_tied());
    }

    #[test]
    fn class_conditional_single_class_matches_plain_fit() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64).sin(), (i as f64).cos()]).collect();
        let x = features(&rows);
        let opts = EmOptions::default();
        let (cc, summary) = fit_class_conditional(&x, &vec![7; 20], &opts).unwrap();
        assert_eq!(cc.classes(), vec![7]);
        assert_eq!(summary[0].count, 20);
        assert_eq!(cc.get(7).unwrap(), &em_fit(&x, &opts).unwrap().model);
    }

    #[test]
    fn class_conditional_means() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.5],
            vec![10.0, 10.0],
            vec![0.5, 1.0],
            vec![11.0, 9.0],
        ];
        let labels = [1, 1, 0, 1, 0];
        let (cc, _) = fit_class_conditional(&features(&rows), &labels, &EmOptions::default()).unwrap();
        assert_eq!(cc.classes(), vec![0, 1]);
        let m0 = &cc.get(0).unwrap().components()[0].mean;
        let m1 = &cc.get(1).unwrap().components()[0].mean;
        assert_abs_diff_eq!(m0[0], 10.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m0[1], 9.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m1[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m1[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn small_class_policies() {
        let rows: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64]).collect();
        let labels = [0, 0, 0, 0, 0, 1, 1];
        let opts = EmOptions {
            n_components: 3,
            ..Default::default()
        };
        assert!(matches!(
            fit_class_conditional(&features(&rows), &labels, &opts),
            Err(Error::ClassTooSmall { class: 1, count: 2 })
        ));
        let (cc, summary) =
            fit_class_conditional_with(&features(&rows), &labels, &opts, SmallClassPolicy::Shrink)
                .unwrap();
        assert_eq!(cc.get(1).unwrap().components().len(), 1);
        assert_eq!(summary[1].n_components, 1);
        assert_eq!(cc.get(0).unwrap().components().len(), 3);
    }
}
