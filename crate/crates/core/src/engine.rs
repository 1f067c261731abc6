//! Uncertainty scores from an output-conditional density and an output prior.
//!
//! For a latent vector `z`:
//!
//! * epistemic: `−log p(z)` with `p(z) = Σ_k p(z|k) p(k)` for classes or
//!   `∫ p(z|y) p(y) dy` (trapezoid rule on a [`SupportGrid`]) for scalar outputs;
//! * aleatoric: entropy of the posterior `p(y|z) = p(z|y) p(y) / p(z)` in nats.
//!   For scalar outputs this is a differential entropy and can be negative.
//!
//! Log-densities and log-priors are always combined with max-shifted
//! exponentiation.

use log::warn;
use rayon::prelude::*;

use crate::density::{ClassConditionalGmm, ClassId, ConditionalFlow};
use crate::error::{Error, Result};
use crate::linalg::{logsumexp_unchecked, Matrix};
use crate::parallel;
use crate::priors::OutputPrior;

/// Halving the grid spacing may change epistemic scores by at most this much
/// before the grid is flagged as too coarse.
pub const GRID_SELF_CHECK_TOL: f64 = 1e-3;

/// Equidistant integration points over the output space.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportGrid {
    points: Vec<f64>,
    spacing: f64,
}

impl SupportGrid {
    /// `n` equidistant points from `lo` to `hi` inclusive.
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 points over a finite interval, got {n} over [{lo}, {hi}]"
            )));
        }
        let spacing = (hi - lo) / (n - 1) as f64;
        let points = (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + spacing * i as f64 })
            .collect();
        Ok(Self { points, spacing })
    }

    /// Grid from explicit points, which must be strictly increasing and
    /// equidistant.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("grid needs at least 2 points".into()));
        }
        let spacing = (points[points.len() - 1] - points[0]) / (points.len() - 1) as f64;
        let scale = points[0].abs().max(points[points.len() - 1].abs()).max(1.0);
        for w in points.windows(2) {
            if !(w[1] > w[0]) || ((w[1] - w[0]) - spacing).abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument(
                    "grid points must be strictly increasing and equidistant".into(),
                ));
            }
        }
        Ok(Self { points, spacing })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Trapezoid weights: `h/2` at both ends, `h` inside.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 {
                    0.5 * self.spacing
                } else {
                    self.spacing
                }
            })
            .collect()
    }

    /// Same interval with twice the resolution.
    pub fn refined(&self) -> Self {
        Self::new(self.lo(), self.hi(), 2 * self.len() - 1).expect("valid refinement")
    }
}

/// Log-density of a latent vector given a scalar output, evaluated at many
/// outputs at once.
pub trait ConditionalDensity: Sync {
    fn dim(&self) -> usize;
    fn log_prob_conditions(&self, z: &[f64], ys: &[f64]) -> Result<Vec<f64>>;
}

impl ConditionalDensity for ConditionalFlow {
    fn dim(&self) -> usize {
        ConditionalFlow::dim(self)
    }

    fn log_prob_conditions(&self, z: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
        ConditionalFlow::log_prob_conditions(self, z, ys)
    }
}

/// Scores for a batch of latent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyScores {
    /// `−log p(z)` in nats.
    pub epistemic: Vec<f64>,
    /// Posterior entropy in nats.
    pub aleatoric: Vec<f64>,
    /// Per-sample posterior over classes or grid points, when kept.
    pub posterior: Option<Vec<Vec<f64>>>,
}

impl UncertaintyScores {
    pub fn len(&self) -> usize {
        self.epistemic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epistemic.is_empty()
    }
}

/// Classification scores for one latent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScore {
    pub epistemic: f64,
    pub aleatoric: f64,
    /// Posterior over `classes`, same order.
    pub posterior: Vec<f64>,
    pub classes: Vec<ClassId>,
}

/// Epistemic and aleatoric scores from per-class log joint densities
/// `log p(z|k) + log p(k)`.
pub fn scores_from_log_joint(log_joint: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
    if log_joint.is_empty() {
        return Err(Error::EmptyInput);
    }
    let log_evidence = logsumexp_unchecked(log_joint);
    if log_evidence == f64::NEG_INFINITY {
        // every class density underflowed: maximal surprise, posterior undefined
        let k = log_joint.len() as f64;
        return Ok((f64::INFINITY, k.ln(), vec![1.0 / k; log_joint.len()]));
    }
    let mut entropy = 0.0;
    let posterior: Vec<f64> = log_joint
        .iter()
        .map(|&l| {
            let lq = l - log_evidence;
            let q = lq.exp();
            if q > 0.0 {
                entropy -= q * lq;
            }
            q
        })
        .collect();
    Ok((-log_evidence, entropy.max(0.0), posterior))
}

fn class_log_joint(
    d: &ClassConditionalGmm,
    p: &OutputPrior,
    z: &[f64],
) -> Result<(Vec<f64>, Vec<ClassId>)> {
    let OutputPrior::Categorical { classes, log_probs } = p else {
        return Err(Error::InvalidArgument(
            "classification scores need a categorical prior".into(),
        ));
    };
    if z.len() != d.dim() {
        return Err(Error::DimMismatch {
            expected: d.dim(),
            got: z.len(),
        });
    }
    let mut joint = Vec::with_capacity(classes.len());
    for (&c, &lp) in classes.iter().zip(log_probs) {
        let gmm = d.get(c).ok_or(Error::MissingClassDensity(c))?;
        joint.push(if lp == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            gmm.log_prob(z)? + lp
        });
    }
    Ok((joint, classes.clone()))
}

/// `−log Σ_k p(z|k) p(k)`.
pub fn epistemic_classification(d: &ClassConditionalGmm, p: &OutputPrior, z: &[f64]) -> Result<f64> {
    score_classification(d, p, z).map(|s| s.epistemic)
}

/// Entropy of the class posterior, with the posterior itself.
pub fn aleatoric_classification(
    d: &ClassConditionalGmm,
    p: &OutputPrior,
    z: &[f64],
) -> Result<(f64, Vec<f64>)> {
    score_classification(d, p, z).map(|s| (s.aleatoric, s.posterior))
}

pub fn score_classification(d: &ClassConditionalGmm, p: &OutputPrior, z: &[f64]) -> Result<ClassScore> {
    let (joint, classes) = class_log_joint(d, p, z)?;
    let (epistemic, aleatoric, posterior) = scores_from_log_joint(&joint)?;
    Ok(ClassScore {
        epistemic,
        aleatoric,
        posterior,
        classes,
    })
}

/// Scores every row of `x`; rows are processed in parallel.
pub fn score_classification_rows(
    d: &ClassConditionalGmm,
    p: &OutputPrior,
    x: &Matrix,
    keep_posterior: bool,
) -> Result<UncertaintyScores> {
    let rows: Vec<Result<ClassScore>> = parallel::install(|| {
        (0..x.rows())
            .into_par_iter()
            .map(|i| score_classification(d, p, x.row(i)))
            .collect()
    });
    let mut out = UncertaintyScores {
        epistemic: Vec::with_capacity(rows.len()),
        aleatoric: Vec::with_capacity(rows.len()),
        posterior: keep_posterior.then(Vec::new),
    };
    for r in rows {
        let s = r?;
        out.epistemic.push(s.epistemic);
        out.aleatoric.push(s.aleatoric);
        if let Some(post) = out.posterior.as_mut() {
            post.push(s.posterior);
        }
    }
    Ok(out)
}

/// Posterior density of a scalar output on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior {
    pub grid: SupportGrid,
    /// Density values at the grid points; trapezoid integral is 1.
    pub density: Vec<f64>,
    /// `log p(z)` from the same quadrature.
    pub log_evidence: f64,
    /// Prior mass covered by the grid before renormalization.
    pub prior_mass: f64,
}

impl GridPosterior {
    pub fn mass(&self) -> f64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.density)
            .map(|(w, q)| w * q)
            .sum()
    }

    /// Posterior mean of the output.
    pub fn mean(&self) -> f64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.density)
            .zip(self.grid.points())
            .map(|((w, q), y)| w * q * y)
            .sum()
    }
}

/// Regression scores for one latent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionScore {
    pub epistemic: f64,
    pub aleatoric: f64,
    pub posterior: GridPosterior,
}

fn regression_log_joint<D: ConditionalDensity + ?Sized>(
    f: &D,
    p: &OutputPrior,
    grid: &SupportGrid,
    z: &[f64],
) -> Result<Vec<f64>> {
    if p.is_categorical() {
        return Err(Error::InvalidArgument(
            "regression scores need a continuous prior".into(),
        ));
    }
    if z.len() != f.dim() {
        return Err(Error::DimMismatch {
            expected: f.dim(),
            got: z.len(),
        });
    }
    let log_lik = f.log_prob_conditions(z, grid.points())?;
    grid.points()
        .iter()
        .zip(log_lik)
        .map(|(&y, ll)| {
            let lp = p.log_density(y)?;
            Ok(if lp == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                ll + lp
            })
        })
        .collect()
}

pub fn score_regression<D: ConditionalDensity + ?Sized>(
    f: &D,
    p: &OutputPrior,
    grid: &SupportGrid,
    z: &[f64],
) -> Result<RegressionScore> {
    let joint = regression_log_joint(f, p, grid, z)?;
    let weights = grid.trapezoid_weights();
    let weighted: Vec<f64> = joint.iter().zip(&weights).map(|(l, w)| l + w.ln()).collect();
    let log_evidence = logsumexp_unchecked(&weighted);

    let prior_mass: f64 = grid
        .points()
        .iter()
        .zip(&weights)
        .map(|(&y, w)| w * p.log_density(y).map_or(0.0, f64::exp))
        .sum();

    let mut entropy = 0.0;
    let density: Vec<f64> = if log_evidence == f64::NEG_INFINITY {
        vec![0.0; joint.len()]
    } else {
        joint
            .iter()
            .zip(&weights)
            .map(|(&l, w)| {
                let lq = l - log_evidence;
                let q = lq.exp();
                if q > 0.0 {
                    entropy -= w * q * lq;
                }
                q
            })
            .collect()
    };
    Ok(RegressionScore {
        epistemic: -log_evidence,
        aleatoric: entropy,
        posterior: GridPosterior {
            grid: grid.clone(),
            density,
            log_evidence,
            prior_mass,
        },
    })
}

/// `−log ∫ p(z|y) p(y) dy` by the trapezoid rule on `grid`.
pub fn epistemic_regression<D: ConditionalDensity + ?Sized>(
    f: &D,
    p: &OutputPrior,
    grid: &SupportGrid,
    z: &[f64],
) -> Result<f64> {
    score_regression(f, p, grid, z).map(|s| s.epistemic)
}

/// Differential entropy of the grid posterior, with the posterior itself.
pub fn aleatoric_regression<D: ConditionalDensity + ?Sized>(
    f: &D,
    p: &OutputPrior,
    grid: &SupportGrid,
    z: &[f64],
) -> Result<(f64, GridPosterior)> {
    score_regression(f, p, grid, z).map(|s| (s.aleatoric, s.posterior))
}

/// Epistemic score plus a self-check on a grid of twice the resolution.
/// The flag is set (and a warning logged) when the two differ by more than
/// [`GRID_SELF_CHECK_TOL`].
pub fn epistemic_regression_checked<D: ConditionalDensity + ?Sized>(
    f: &D,
    p: &OutputPrior,
    grid: &SupportGrid,
    z: &[f64],
) -> Result<(f64, bool)> {
    let coarse = epistemic_regression(f, p, grid, z)?;
    let fine = epistemic_regression(f, p, &grid.refined(), z)?;
    let too_coarse = (coarse - fine).abs() > GRID_SELF_CHECK_TOL;
    if too_coarse {
        warn!(
            "grid with {} points too coarse: halving the spacing moves the epistemic score by {:.3e}",
            grid.len(),
            (coarse - fine).abs()
        );
    }
    Ok((coarse, too_coarse))
}

/// Scores every row of `x`; rows are processed in parallel.
pub fn score_regression_rows<D: ConditionalDensity + ?Sized>(
    f: &D,
    p: &OutputPrior,
    grid: &SupportGrid,
    x: &Matrix,
) -> Result<Vec<RegressionScore>> {
    parallel::install(|| {
        (0..x.rows())
            .into_par_iter()
            .map(|i| score_regression(f, p, grid, x.row(i)))
            .collect()
    })
}

/// Interval around a prediction holding a given posterior mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceRegion {
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
}

/// Grows an interval outward from `prediction` in rounds of one grid cell up
/// and one cell down (skipping a side once it reaches the grid end) until the
/// enclosed posterior mass reaches `mass`. The density is linear between grid
/// points, matching the trapezoid rule.
pub fn confidence_region(post: &GridPosterior, prediction: f64, mass: f64) -> Result<ConfidenceRegion> {
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::InvalidArgument(format!("mass must lie in (0, 1), got {mass}")));
    }
    let pts = post.grid.points();
    let q = &post.density;
    let n = pts.len();
    if !(prediction >= pts[0] && prediction <= pts[n - 1]) {
        return Err(Error::InvalidArgument(format!(
            "prediction {prediction} outside grid [{}, {}]",
            pts[0],
            pts[n - 1]
        )));
    }
    let available = post.mass();
    // renormalized posteriors integrate to 1 up to rounding
    let slack = 1e-9;
    if available < mass - slack {
        return Err(Error::MassUnreachable {
            target: mass,
            available,
        });
    }

    let j = pts.partition_point(|&y| y <= prediction).clamp(1, n - 1) - 1;
    let frac = (prediction - pts[j]) / (pts[j + 1] - pts[j]);
    let q_pred = q[j] + frac * (q[j + 1] - q[j]);

    let mut acc = 0.0;
    let mut lower = prediction;
    let mut upper = prediction;
    // next grid index each side will step to
    let mut up = j + 1;
    let mut down = if frac == 0.0 { j.checked_sub(1) } else { Some(j) };
    let mut q_upper = q_pred;
    let mut q_lower = q_pred;
    while acc < mass {
        if up >= n && down.is_none() {
            if acc >= mass - slack {
                break;
            }
            return Err(Error::MassUnreachable {
                target: mass,
                available: acc,
            });
        }
        if up < n {
            acc += 0.5 * (q_upper + q[up]) * (pts[up] - upper);
            upper = pts[up];
            q_upper = q[up];
            up += 1;
        }
        if let Some(k) = down {
            acc += 0.5 * (q_lower + q[k]) * (lower - pts[k]);
            lower = pts[k];
            q_lower = q[k];
            down = k.checked_sub(1);
        }
    }
    Ok(ConfidenceRegion { lower, upper, mass })
}
