//! Latent feature matrices with provenance.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `n × d` matrix of latent vectors, one row per input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    matrix: Matrix,
    /// Network layer the activations were taken from, if known.
    pub layer: Option<String>,
    /// Free-form origin tag (file path, generator name).
    pub source: Option<String>,
}

impl FeatureMatrix {
    /// Wraps a matrix, rejecting non-finite entries.
    pub fn new(matrix: Matrix) -> Result<Self> {
        if let Some(pos) = matrix.data().iter().position(|v| !v.is_finite()) {
            let cols = matrix.cols().max(1);
            return Err(Error::InvalidArgument(format!(
                "non-finite feature value at row {}, column {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self {
            matrix,
            layer: None,
            source: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn with_layer(mut self, layer: impl Into<String>) -> Self {
        self.layer = Some(layer.into());
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    /// Same provenance, new values.
    pub(crate) fn with_matrix(&self, matrix: Matrix) -> Self {
        Self {
            matrix,
            layer: self.layer.clone(),
            source: self.source.clone(),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }
}

impl Deref for FeatureMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.matrix
    }
}
