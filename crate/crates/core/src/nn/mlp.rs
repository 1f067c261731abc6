use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::linalg::{gemm, Matrix};

/// Fully connected network, ReLU on hidden layers, identity output.
///
/// Weights are stored `fan_in × fan_out` so a batch `X` (rows = samples)
/// maps to `X·W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    pub(crate) weights: Vec<Matrix>,
    pub(crate) biases: Vec<Vec<f64>>,
}

/// Per-layer values kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each affine layer.
    inputs: Vec<Matrix>,
    /// Pre-activations of hidden layers.
    pre: Vec<Matrix>,
}

/// Gradients shaped like an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Mlp {
    /// All-zero network with the given layer widths.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidArgument(
                "an MLP needs at least an input and an output width".into(),
            ));
        }
        let weights = dims.windows(2).map(|w| Matrix::zeros(w[0], w[1])).collect();
        let biases = dims[1..].iter().map(|&d| vec![0.0; d]).collect();
        Ok(Self {
            dims: dims.to_vec(),
            weights,
            biases,
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut mlp = Self::zeros(dims)?;
        for w in mlp.weights.iter_mut() {
            let limit = (6.0 / (w.rows() + w.cols()).max(1) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
            for v in w.data_mut() {
                *v = dist.sample(rng);
            }
        }
        Ok(mlp)
    }

    pub fn from_parts(weights: Vec<Matrix>, biases: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::InvalidArgument("weights and biases disagree".into()));
        }
        let mut dims = vec![weights[0].rows()];
        for (w, b) in weights.iter().zip(&biases) {
            if w.rows() != *dims.last().unwrap() || w.cols() != b.len() {
                return Err(Error::InvalidArgument("inconsistent layer shapes".into()));
            }
            dims.push(w.cols());
        }
        Ok(Self {
            dims,
            weights,
            biases,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    /// Zeroes the output layer so the network starts as the zero function.
    pub fn zero_output_layer(&mut self) {
        let last = self.weights.len() - 1;
        self.weights[last].data_mut().fill(0.0);
        self.biases[last].fill(0.0);
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(Matrix::all_finite)
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }

    fn affine(&self, layer: usize, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.dims[layer + 1]);
        gemm(1.0, x, false, &self.weights[layer], false, 0.0, &mut out);
        out.add_row_vector(&self.biases[layer]);
        out
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        let last = self.n_layers() - 1;
        let mut h = self.affine(0, x);
        for l in 1..=last {
            h.map_inplace(relu);
            h = self.affine(l, &h);
        }
        h
    }

    pub fn forward_cached(&self, x: &Matrix) -> (Matrix, MlpCache) {
        let last = self.n_layers() - 1;
        let mut inputs = Vec::with_capacity(self.n_layers());
        let mut pre = Vec::with_capacity(last);
        inputs.push(x.clone());
        let mut h = self.affine(0, x);
        for l in 1..=last {
            let mut act = h.clone();
            act.map_inplace(relu);
            pre.push(h);
            h = self.affine(l, &act);
            inputs.push(act);
        }
        (h, MlpCache { inputs, pre })
    }

    /// Post-ReLU activations of hidden layer `index` (0-based).
    pub fn hidden_activations(&self, x: &Matrix, index: usize) -> Result<Matrix> {
        let hidden = self.n_layers() - 1;
        if index >= hidden {
            return Err(Error::BadLayerIndex { index, hidden });
        }
        let mut h = self.affine(0, x);
        h.map_inplace(relu);
        for l in 1..=index {
            h = self.affine(l, &h);
            h.map_inplace(relu);
        }
        Ok(h)
    }

    /// Accumulates parameter gradients for `d_out = ∂L/∂output` into `grads`
    /// and returns `∂L/∂input` when requested.
    pub fn backward(
        &self,
        cache: &MlpCache,
        d_out: &Matrix,
        grads: &mut MlpGrads,
        want_input_grad: bool,
    ) -> Option<Matrix> {
        let mut delta = d_out.clone();
        for l in (0..self.n_layers()).rev() {
            let input = &cache.inputs[l];
            gemm(1.0, input, true, &delta, false, 1.0, &mut grads.weights[l]);
            for (g, s) in grads.biases[l].iter_mut().zip(delta.column_sums()) {
                *g += s;
            }
            if l == 0 && !want_input_grad {
                return None;
            }
            let mut d_in = Matrix::zeros(delta.rows(), self.dims[l]);
            gemm(1.0, &delta, false, &self.weights[l], true, 0.0, &mut d_in);
            if l == 0 {
                return Some(d_in);
            }
            let pre = &cache.pre[l - 1];
            for (d, &z) in d_in.data_mut().iter_mut().zip(pre.data()) {
                if z <= 0.0 {
                    *d = 0.0;
                }
            }
            delta = d_in;
        }
        unreachable!("loop returns at layer 0")
    }

    pub fn params(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.n_layers());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.data());
            out.push(b.as_slice());
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.n_layers());
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w.data_mut());
            out.push(b.as_mut_slice());
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            weights: mlp
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: mlp.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.data());
            out.push(b.as_slice());
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for w in &mut self.weights {
            w.map_inplace(|v| v * s);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|v| *v *= s);
        }
    }
}

#[inline]
pub(crate) fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn loss(mlp: &Mlp, x: &Matrix) -> f64 {
        // L = Σ out² / 2
        mlp.forward(x).data().iter().map(|v| 0.5 * v * v).sum()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut mlp = Mlp::glorot(&[3, 5, 4, 2], &mut rng).unwrap();
        for b in mlp.biases.iter_mut() {
            b.iter_mut().enumerate().for_each(|(i, v)| *v = 0.1 * i as f64 - 0.05);
        }
        let x = Matrix::from_rows(&[[0.3, -0.7, 1.1], [1.4, 0.2, -0.5]]).unwrap();
        let (out, cache) = mlp.forward_cached(&x);
        let mut grads = MlpGrads::zeros_like(&mlp);
        let d_in = mlp.backward(&cache, &out, &mut grads, true).unwrap();

        let h = 1e-6;
        let analytic: Vec<f64> = grads.slices().concat();
        let mut k = 0;
        for s in 0..mlp.params().len() {
            for i in 0..mlp.params()[s].len() {
                let orig = mlp.params()[s][i];
                mlp.params_mut()[s][i] = orig + h;
                let up = loss(&mlp, &x);
                mlp.params_mut()[s][i] = orig - h;
                let down = loss(&mlp, &x);
                mlp.params_mut()[s][i] = orig;
                let fd = (up - down) / (2.0 * h);
                assert!((fd - analytic[k]).abs() < 1e-6, "param {k}: {fd} vs {}", analytic[k]);
                k += 1;
            }
        }
        for r in 0..2 {
            for c in 0..3 {
                let mut xp = x.clone();
                xp[(r, c)] += h;
                let mut xm = x.clone();
                xm[(r, c)] -= h;
                let fd = (loss(&mlp, &xp) - loss(&mlp, &xm)) / (2.0 * h);
                assert!((fd - d_in[(r, c)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn hidden_activations_match_cache() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mlp = Mlp::glorot(&[2, 4, 4, 1], &mut rng).unwrap();
        let x = Matrix::from_rows(&[[0.5, -1.0]]).unwrap();
        let (_, cache) = mlp.forward_cached(&x);
        assert_eq!(mlp.hidden_activations(&x, 0).unwrap(), cache.inputs[1]);
        assert_eq!(mlp.hidden_activations(&x, 1).unwrap(), cache.inputs[2]);
        assert!(matches!(
            mlp.hidden_activations(&x, 2),
            Err(Error::BadLayerIndex { index: 2, hidden: 2 })
        ));
    }
}
