//! Synthetic data: a 1-D regression target with a gap in the training inputs
//! and 2-D Gaussian blobs for classification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::density::ClassId;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `f(x) = ½ (sin(4πx − π/2) + x)`, mapping [−1, 1] onto [−1, 1].
pub fn toy_function(x: f64) -> f64 {
    0.5 * ((4.0 * std::f64::consts::PI * x - std::f64::consts::FRAC_PI_2).sin() + x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyRegressionSpec {
    pub n_train: usize,
    pub x_range: (f64, f64),
    /// Interval left out of the training inputs.
    pub gap: (f64, f64),
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for ToyRegressionSpec {
    fn default() -> Self {
        Self {
            n_train: 750,
            x_range: (-1.0, 1.0),
            gap: (-0.25, 0.25),
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl ToyRegressionSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.x_range;
        let (g0, g1) = self.gap;
        if !(lo < hi) || !(g0 <= g1) || g0 < lo || g1 > hi || (g0 == lo && g1 == hi) {
            return Err(Error::InvalidArgument(format!(
                "gap [{g0}, {g1}] must lie inside the input range [{lo}, {hi}] and leave room for data"
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument("noise sigma must be non-negative".into()));
        }
        if self.n_train == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(())
    }

    pub fn in_gap(&self, x: f64) -> bool {
        x > self.gap.0 && x < self.gap.1
    }
}

/// `n_train` inputs uniform on the input range minus the gap, targets
/// `f(x)` plus optional Gaussian noise. Inputs are returned as an `n × 1`
/// matrix.
pub fn gen_regression_data(spec: &ToyRegressionSpec) -> Result<(Matrix, Vec<f64>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = spec.x_range;
    let (g0, g1) = spec.gap;
    let left = g0 - lo;
    let total = left + (hi - g1);
    let mut x = Vec::with_capacity(spec.n_train);
    let mut y = Vec::with_capacity(spec.n_train);
    for _ in 0..spec.n_train {
        // map a uniform draw over the combined length onto the two pieces
        let u: f64 = rng.random::<f64>() * total;
        let xi = if u < left { lo + u } else { g1 + (u - left) };
        let noise = if spec.noise_sigma > 0.0 {
            let e: f64 = StandardNormal.sample(&mut rng);
            spec.noise_sigma * e
        } else {
            0.0
        };
        x.push(xi);
        y.push(toy_function(xi) + noise);
    }
    Ok((Matrix::from_vec(spec.n_train, 1, x)?, y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyClassificationSpec {
    pub centers: Vec<[f64; 2]>,
    pub sigma: f64,
    pub n_per_class: usize,
    pub seed: u64,
}

impl Default for ToyClassificationSpec {
    /// Four blobs at (±2, ±2) with σ = 0.4 and 500 points each.
    fn default() -> Self {
        Self {
            centers: vec![[-2.0, -2.0], [2.0, -2.0], [-2.0, 2.0], [2.0, 2.0]],
            sigma: 0.4,
            n_per_class: 500,
            seed: 0,
        }
    }
}

impl ToyClassificationSpec {
    pub fn n_classes(&self) -> usize {
        self.centers.len()
    }

    /// Same blobs moved by `offset` along both axes.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            centers: self.centers.iter().map(|c| [c[0] + offset, c[1] + offset]).collect(),
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Points drawn class by class; labels are the blob indices.
pub fn gen_classification_data(spec: &ToyClassificationSpec) -> Result<(Matrix, Vec<ClassId>)> {
    if spec.centers.len() < 2 {
        return Err(Error::InvalidArgument("toy classification needs at least 2 classes".into()));
    }
    if spec.n_per_class == 0 {
        return Err(Error::EmptyInput);
    }
    let normal = Normal::new(0.0, spec.sigma)
        .map_err(|e| Error::InvalidArgument(format!("cluster sigma: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.centers.len() * spec.n_per_class;
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for (k, c) in spec.centers.iter().enumerate() {
        for _ in 0..spec.n_per_class {
            data.push(c[0] + normal.sample(&mut rng));
            data.push(c[1] + normal.sample(&mut rng));
            labels.push(k as ClassId);
        }
    }
    Ok((Matrix::from_vec(n, 2, data)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn function_values() {
        assert_abs_diff_eq!(toy_function(0.0), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(toy_function(0.25), 0.625, epsilon = 1e-15);
        assert_abs_diff_eq!(toy_function(1.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn no_inputs_in_gap() {
        let spec = ToyRegressionSpec::default();
        let (x, y) = gen_regression_data(&spec).unwrap();
        assert_eq!(x.rows(), 750);
        assert!(x.data().iter().all(|&v| !spec.in_gap(v) && (-1.0..=1.0).contains(&v)));
        for (xi, yi) in x.data().iter().zip(&y) {
            assert_eq!(*yi, toy_function(*xi));
        }
        assert!(x.data().iter().any(|&v| v < -0.25) && x.data().iter().any(|&v| v > 0.25));
    }

    #[test]
    fn bad_gap_rejected() {
        let spec = ToyRegressionSpec {
            gap: (0.5, 1.5),
            ..Default::default()
        };
        assert!(gen_regression_data(&spec).is_err());
    }

    #[test]
    fn blobs_are_seeded() {
        let spec = ToyClassificationSpec::default();
        let (a, la) = gen_classification_data(&spec).unwrap();
        let (b, _) = gen_classification_data(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows(), 2000);
        assert_eq!(la.iter().filter(|&&l| l == 3).count(), 500);
    }
}
