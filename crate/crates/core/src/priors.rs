//! Distributions over model outputs `p(ŷ)`.
//!
//! Classification priors come from counting predicted labels on the training
//! set. Regression priors are univariate: a uniform interval, a beta-prime
//! density (useful for strictly positive outputs such as depth), or a
//! histogram fallback when no parametric family fits.

use std::collections::BTreeMap;

use statrs::distribution::{Beta, ContinuousCDF};
use statrs::function::beta::ln_beta;

use crate::density::ClassId;
use crate::error::{Error, Result};

/// Pseudo-count added to every histogram bin so the log-density stays finite.
const HISTOGRAM_PSEUDO_COUNT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum OutputPrior {
    Categorical {
        classes: Vec<ClassId>,
        log_probs: Vec<f64>,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    BetaPrime {
        alpha: f64,
        beta: f64,
    },
    Histogram {
        edges: Vec<f64>,
        log_densities: Vec<f64>,
    },
}

/// A model output: a class label or a real value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Output {
    Class(ClassId),
    Value(f64),
}

impl OutputPrior {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "uniform prior needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self::Uniform { lo, hi })
    }

    pub fn beta_prime(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "beta-prime parameters must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(Self::BetaPrime { alpha, beta })
    }

    /// Categorical prior from explicit probabilities.
    pub fn categorical(classes: Vec<ClassId>, probs: &[f64]) -> Result<Self> {
        if classes.is_empty() || classes.len() != probs.len() {
            return Err(Error::InvalidArgument(
                "categorical prior needs one probability per class".into(),
            ));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidArgument("probabilities must be non-negative".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { sum });
        }
        let mut pairs: Vec<(ClassId, f64)> = classes.into_iter().zip(probs.iter().copied()).collect();
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate class id".into()));
        }
        Ok(Self::Categorical {
            classes: pairs.iter().map(|p| p.0).collect(),
            log_probs: pairs.iter().map(|p| p.1.ln()).collect(),
        })
    }

    /// Histogram prior from bin edges and (unnormalized) non-negative bin
    /// weights.
    pub fn histogram(edges: Vec<f64>, weights: &[f64]) -> Result<Self> {
        if edges.len() < 2 || weights.len() != edges.len() - 1 {
            return Err(Error::InvalidArgument(
                "histogram needs n+1 edges for n bins".into(),
            ));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("histogram edges must increase".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidArgument("histogram weights must be non-negative".into()));
        }
        let log_densities = weights
            .iter()
            .zip(edges.windows(2))
            .map(|(&w, e)| (w / total / (e[1] - e[0])).ln())
            .collect();
        Ok(Self::Histogram {
            edges,
            log_densities,
        })
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, Self::Categorical { .. })
    }

    /// Log-mass of a class; `-inf` for classes outside the prior.
    pub fn log_mass(&self, class: ClassId) -> Result<f64> {
        match self {
            Self::Categorical { classes, log_probs } => Ok(classes
                .binary_search(&class)
                .map_or(f64::NEG_INFINITY, |i| log_probs[i])),
            _ => Err(Error::InvalidArgument(
                "class query on a continuous prior".into(),
            )),
        }
    }

    /// Log-density of a real output; `-inf` outside the support.
    pub fn log_density(&self, y: f64) -> Result<f64> {
        match *self {
            Self::Categorical { .. } => Err(Error::InvalidArgument(
                "density query on a categorical prior".into(),
            )),
            Self::Uniform { lo, hi } => Ok(if (lo..=hi).contains(&y) {
                -(hi - lo).ln()
            } else {
                f64::NEG_INFINITY
            }),
            Self::BetaPrime { alpha, beta } => Ok(if y > 0.0 && y.is_finite() {
                (alpha - 1.0) * y.ln() - (alpha + beta) * y.ln_1p() - ln_beta(alpha, beta)
            } else {
                f64::NEG_INFINITY
            }),
            Self::Histogram {
                ref edges,
                ref log_densities,
            } => {
                let last = *edges.last().unwrap();
                if !(y >= edges[0] && y <= last) {
                    return Ok(f64::NEG_INFINITY);
                }
                // bins are [e_i, e_{i+1}); the final edge belongs to the last bin
                let bin = edges.partition_point(|&e| e <= y).saturating_sub(1);
                Ok(log_densities[bin.min(log_densities.len() - 1)])
            }
        }
    }

    /// Support of a continuous prior (`(0, inf)` for beta-prime).
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Categorical { .. } => None,
            Self::Uniform { lo, hi } => Some((lo, hi)),
            Self::BetaPrime { .. } => Some((0.0, f64::INFINITY)),
            Self::Histogram { ref edges, .. } => Some((edges[0], *edges.last().unwrap())),
        }
    }

    /// Finite interval carrying all but `tail` of the mass on each side,
    /// for laying out integration grids.
    pub fn grid_range(&self, tail: f64) -> Option<(f64, f64)> {
        match *self {
            Self::BetaPrime { alpha, beta } => {
                // X/(1+X) ~ Beta(alpha, beta)
                let b = Beta::new(alpha, beta).ok()?;
                let to_x = |q: f64| q / (1.0 - q);
                Some((to_x(b.inverse_cdf(tail)), to_x(b.inverse_cdf(1.0 - tail))))
            }
            _ => self.support(),
        }
    }
}

/// Log prior of an output of either kind.
pub fn prior_log_pdf(p: &OutputPrior, y: Output) -> Result<f64> {
    match y {
        Output::Class(c) => p.log_mass(c),
        Output::Value(v) => p.log_density(v),
    }
}

/// Categorical prior by counting predicted labels.
///
/// `declared` lists the classes the density model carries (defaults to the
/// labels seen). When any declared class has no predicted label, every class
/// gets `smoothing` pseudo-counts so none is assigned zero mass.
pub fn fit_categorical(
    predicted_labels: &[ClassId],
    declared: Option<&[ClassId]>,
    smoothing: f64,
) -> Result<OutputPrior> {
    if predicted_labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts: BTreeMap<ClassId, f64> = BTreeMap::new();
    if let Some(classes) = declared {
        for &c in classes {
            counts.insert(c, 0.0);
        }
    }
    for &l in predicted_labels {
        *counts.entry(l).or_insert(0.0) += 1.0;
    }
    let needs_smoothing = counts.values().any(|&c| c == 0.0);
    let pseudo = if needs_smoothing { smoothing } else { 0.0 };
    let total: f64 = counts.values().map(|c| c + pseudo).sum();
    let classes: Vec<ClassId> = counts.keys().copied().collect();
    let log_probs = counts
        .values()
        .map(|&c| ((c + pseudo) / total).ln())
        .collect();
    Ok(OutputPrior::Categorical { classes, log_probs })
}

/// Method-of-moments beta-prime fit.
///
/// With mean `m` and variance `v`, the moments `m = α/(β−1)` and
/// `v = α(α+β−1)/((β−2)(β−1)²)` invert to `β = 2 + m(m+1)/v` and `α = m(β−1)`.
pub fn betaprime_fit_mom(samples: &[f64]) -> Result<OutputPrior> {
    if samples.len() < 10 {
        return Err(Error::TooFewSamples {
            needed: 10,
            got: samples.len(),
        });
    }
    if let Some(bad) = samples.iter().find(|&&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "beta-prime samples must be positive and finite, found {bad}"
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let (alpha, beta) = betaprime_from_moments(mean, var)?;
    OutputPrior::beta_prime(alpha, beta)
}

/// Inverts the beta-prime mean/variance formulas.
pub fn betaprime_from_moments(mean: f64, var: f64) -> Result<(f64, f64)> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::MomentInversionFailed(format!(
            "sample variance {var} leaves the beta-prime family"
        )));
    }
    let beta = 2.0 + mean * (mean + 1.0) / var;
    let alpha = mean * (beta - 1.0);
    if !(beta > 2.0 && alpha > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::MomentInversionFailed(format!(
            "moments (mean {mean}, variance {var}) give alpha {alpha}, beta {beta}"
        )));
    }
    Ok((alpha, beta))
}

/// Beta-prime mean and variance (finite for `beta > 2`).
pub fn betaprime_moments(alpha: f64, beta: f64) -> (f64, f64) {
    let mean = alpha / (beta - 1.0);
    let var = alpha * (alpha + beta - 1.0) / ((beta - 2.0) * (beta - 1.0).powi(2));
    (mean, var)
}

/// Equal-width histogram over the sample range.
pub fn fit_histogram(samples: &[f64], bins: usize) -> Result<OutputPrior> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidArgument("histogram samples must be finite".into()));
    }
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![HISTOGRAM_PSEUDO_COUNT; bins];
    for &s in samples {
        let b = (((s - lo) / width) as usize).min(bins - 1);
        counts[b] += 1.0;
    }
    OutputPrior::histogram(edges, &counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn probs(p: &OutputPrior) -> Vec<f64> {
        match p {
            OutputPrior::Categorical { log_probs, .. } => log_probs.iter().map(|l| l.exp()).collect(),
            _ => panic!("not categorical"),
        }
    }

    #[test]
    fn categorical_counting() {
        let p = fit_categorical(&[0, 0, 0, 1], Some(&[0, 1]), 1.0).unwrap();
        let pr = probs(&p);
        assert_abs_diff_eq!(pr[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(pr[1], 0.25, epsilon = 1e-15);

        let single = fit_categorical(&[3, 3], None, 1.0).unwrap();
        assert_eq!(probs(&single), vec![1.0]);

        let smoothed = fit_categorical(&[0, 1], Some(&[0, 1, 2]), 1.0).unwrap();
        let pr = probs(&smoothed);
        assert_abs_diff_eq!(pr[0], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(pr[1], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(pr[2], 0.2, epsilon = 1e-15);

        assert!(matches!(fit_categorical(&[], None, 1.0), Err(Error::EmptyInput)));
    }

    #[test]
    fn log_pdf_examples() {
        let u = OutputPrior::uniform(-10.0, 10.0).unwrap();
        assert_abs_diff_eq!(prior_log_pdf(&u, Output::Value(0.0)).unwrap(), -(20.0_f64).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(u.log_density(0.0).unwrap(), -2.995732, epsilon = 1e-6);
        assert_eq!(u.log_density(10.5).unwrap(), f64::NEG_INFINITY);

        let bp = OutputPrior::beta_prime(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(bp.log_density(1.0).unwrap(), 0.25_f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(bp.log_density(1.0).unwrap(), -1.386294, epsilon = 1e-6);
        assert_eq!(bp.log_density(0.0).unwrap(), f64::NEG_INFINITY);

        let cat = OutputPrior::categorical(vec![0, 1], &[0.75, 0.25]).unwrap();
        assert_abs_diff_eq!(prior_log_pdf(&cat, Output::Class(1)).unwrap(), 0.25_f64.ln(), epsilon = 1e-15);
        assert_eq!(cat.log_mass(9).unwrap(), f64::NEG_INFINITY);
        assert!(cat.log_density(0.0).is_err());
    }

    #[test]
    fn constant_samples_fail_inversion() {
        assert!(matches!(
            betaprime_fit_mom(&[2.0; 20]),
            Err(Error::MomentInversionFailed(_))
        ));
        assert!(betaprime_fit_mom(&[1.0; 5]).is_err());
    }

    #[test]
    fn moment_round_trip() {
        let samples: Vec<f64> = (1..=50).map(|i| 1.0 + (i as f64 * 0.37).sin().abs() * 3.0).collect();
        let n = samples.len() as f64;
        let m = samples.iter().sum::<f64>() / n;
        let v = samples.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1.0);
        let p = betaprime_fit_mom(&samples).unwrap();
        let OutputPrior::BetaPrime { alpha, beta } = p else { panic!() };
        let (m2, v2) = betaprime_moments(alpha, beta);
        assert!((m2 - m).abs() <= 1e-9 * m.abs());
        assert!((v2 - v).abs() <= 1e-9 * v.abs());
    }

    #[test]
    fn histogram_lookup() {
        let h = OutputPrior::histogram(vec![0.0, 1.0, 3.0], &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(h.log_density(0.5).unwrap(), 0.5_f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(h.log_density(3.0).unwrap(), 0.25_f64.ln(), epsilon = 1e-15);
        assert_eq!(h.log_density(-0.1).unwrap(), f64::NEG_INFINITY);
        let fitted = fit_histogram(&[0.0, 0.1, 0.2, 5.0], 4).unwrap();
        assert!(fitted.log_density(2.5).unwrap().is_finite());
    }

    #[test]
    fn beta_prime_grid_range_brackets_the_mean() {
        let bp = OutputPrior::beta_prime(31.76, 3.07).unwrap();
        let (lo, hi) = bp.grid_range(1e-6).unwrap();
        let (m, _) = betaprime_moments(31.76, 3.07);
        assert!(lo > 0.0 && lo < m && m < hi);
    }
}
