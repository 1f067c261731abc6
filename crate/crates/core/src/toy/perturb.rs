//! Input perturbations for shift experiments.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// Independent `N(0, σ²)` noise on every entry.
    GaussianNoise { sigma: f64 },
    /// Rotation of 2-D inputs about the origin, angle in degrees.
    Rotate2d { degrees: f64 },
    /// Sign flip of one input coordinate.
    FlipAxis { axis: usize },
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GaussianNoise { sigma } => write!(f, "gaussian_noise:{sigma}"),
            Self::Rotate2d { degrees } => write!(f, "rotate_2d:{degrees}"),
            Self::FlipAxis { axis } => write!(f, "flip_axis:{axis}"),
        }
    }
}

impl FromStr for Perturbation {
    type Err = Error;

    /// `gaussian_noise:<sigma>`, `rotate_2d:<degrees>` or `flip_axis:<axis>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadKind(s.to_string());
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "gaussian_noise" => {
                let sigma: f64 = arg.parse().map_err(|_| bad())?;
                if !(sigma >= 0.0) || !sigma.is_finite() {
                    return Err(bad());
                }
                Ok(Self::GaussianNoise { sigma })
            }
            "rotate_2d" => Ok(Self::Rotate2d {
                degrees: arg.parse().map_err(|_| bad())?,
            }),
            "flip_axis" => Ok(Self::FlipAxis {
                axis: arg.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Transformed copy of `inputs`; noise is reproducible per `seed`.
pub fn perturb(inputs: &Matrix, kind: Perturbation, seed: u64) -> Result<Matrix> {
    let mut out = inputs.clone();
    match kind {
        Perturbation::GaussianNoise { sigma } => {
            if !(sigma >= 0.0) {
                return Err(Error::BadKind(kind.to_string()));
            }
            if sigma > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for v in out.data_mut() {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    *v += sigma * e;
                }
            }
        }
        Perturbation::Rotate2d { degrees } => {
            if inputs.cols() != 2 {
                return Err(Error::BadKind(format!(
                    "{kind} needs 2-D inputs, got {} columns",
                    inputs.cols()
                )));
            }
            let (s, c) = degrees.to_radians().sin_cos();
            for r in 0..out.rows() {
                let row = out.row_mut(r);
                let (x, y) = (row[0], row[1]);
                row[0] = c * x - s * y;
                row[1] = s * x + c * y;
            }
        }
        Perturbation::FlipAxis { axis } => {
            if axis >= inputs.cols() {
                return Err(Error::BadKind(format!(
                    "{kind} out of range for {} columns",
                    inputs.cols()
                )));
            }
            for r in 0..out.rows() {
                out.row_mut(r)[axis] *= -1.0;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_is_identity() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(perturb(&x, Perturbation::GaussianNoise { sigma: 0.0 }, 3).unwrap(), x);
    }

    #[test]
    fn half_turn_twice_restores() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [-3.5, 0.25]]).unwrap();
        let r = Perturbation::Rotate2d { degrees: 180.0 };
        let back = perturb(&perturb(&x, r, 0).unwrap(), r, 0).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(perturb(&Matrix::zeros(1, 3), r, 0).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!(
            "gaussian_noise:0.5".parse::<Perturbation>().unwrap(),
            Perturbation::GaussianNoise { sigma: 0.5 }
        );
        assert_eq!("flip_axis:1".parse::<Perturbation>().unwrap(), Perturbation::FlipAxis { axis: 1 });
        assert!(matches!("blur:2".parse::<Perturbation>(), Err(Error::BadKind(_))));
        assert!(matches!("gaussian_noise:-1".parse::<Perturbation>(), Err(Error::BadKind(_))));
    }
}
