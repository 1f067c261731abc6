//! Conditional normalizing flow built from affine coupling layers.
//!
//! Each layer copies one coordinate partition `u1` and maps the other as
//! `u2 ↦ (u2 + t(u1; c)) ⊙ exp(s̃(u1; c))`, where `s̃ = α·tanh(raw/α)` bounds the
//! per-coordinate log-scale to `(−α, α)`. The condition `c` goes through a
//! per-layer MLP whose output is appended to `u1` before both subnets, which is
//! the same as adding a learned linear lift of it to their first hidden layer.
//!
//! A one-dimensional flow has no coordinate to copy; its layers are affine maps
//! whose shift and log-scale depend on `c` only.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{Mlp, MlpCache, MlpGrads};

/// Architecture knobs for [`ConditionalFlow::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowArch {
    pub n_layers: usize,
    /// Width of each hidden layer in the scale/translate subnets.
    pub hidden: usize,
    pub hidden_layers: usize,
    /// Width of the condition embedding fed to the subnets.
    pub cond_features: usize,
    /// Soft clamp `α` on the log-scale.
    pub scale_clamp: f64,
}

impl Default for FlowArch {
    fn default() -> Self {
        Self {
            n_layers: 3,
            hidden: 64,
            hidden_layers: 2,
            cond_features: 16,
            scale_clamp: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingLayer {
    dim: usize,
    part1: Vec<usize>,
    part2: Vec<usize>,
    pub scale_net: Mlp,
    pub translate_net: Mlp,
    pub cond_net: Mlp,
    scale_clamp: f64,
}

/// Values from a layer's forward pass needed by its backward pass.
struct LayerCache {
    tanh: Matrix,
    out2: Matrix,
    scale: MlpCache,
    translate: MlpCache,
    cond: MlpCache,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub scale: MlpGrads,
    pub translate: MlpGrads,
    pub cond: MlpGrads,
}

/// Gradients shaped like a [`ConditionalFlow`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGrads {
    pub layers: Vec<LayerGrads>,
}

impl FlowGrads {
    /// Flat view in the same order as [`ConditionalFlow::params_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                l.scale
                    .slices()
                    .into_iter()
                    .chain(l.translate.slices())
                    .chain(l.cond.slices())
            })
            .collect()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.slices().concat()
    }
}

/// Even/odd index partition for layer `index`.
pub(crate) fn partition(dim: usize, index: usize) -> (Vec<usize>, Vec<usize>) {
    if dim == 1 {
        return (Vec::new(), vec![0]);
    }
    let evens: Vec<usize> = (0..dim).step_by(2).collect();
    let odds: Vec<usize> = (1..dim).step_by(2).collect();
    if index % 2 == 0 {
        (evens, odds)
    } else {
        (odds, evens)
    }
}

impl CouplingLayer {
    /// Random layer whose subnet output layers are zero, i.e. the identity map.
    pub fn identity<R: Rng + ?Sized>(
        dim: usize,
        cond_dim: usize,
        index: usize,
        arch: &FlowArch,
        rng: &mut R,
    ) -> Result<Self> {
        let (part1, part2) = partition(dim, index);
        let mut sub_dims = vec![part1.len() + arch.cond_features];
        sub_dims.extend(std::iter::repeat_n(arch.hidden, arch.hidden_layers));
        sub_dims.push(part2.len());
        let mut scale_net = Mlp::glorot(&sub_dims, rng)?;
        scale_net.zero_output_layer();
        let mut translate_net = Mlp::glorot(&sub_dims, rng)?;
        translate_net.zero_output_layer();
        let cond_net = Mlp::glorot(&[cond_dim, arch.hidden, arch.cond_features], rng)?;
        Self::from_parts(
            dim,
            index,
            scale_net,
            translate_net,
            cond_net,
            arch.scale_clamp,
        )
    }

    /// Assembles a layer from explicit subnets, checking their shapes.
    pub fn from_parts(
        dim: usize,
        index: usize,
        scale_net: Mlp,
        translate_net: Mlp,
        cond_net: Mlp,
        scale_clamp: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("flow dimension must be positive".into()));
        }
        if !(scale_clamp > 0.0) {
            return Err(Error::InvalidArgument("scale clamp must be positive".into()));
        }
        let (part1, part2) = partition(dim, index);
        let cf = cond_net.output_dim();
        for net in [&scale_net, &translate_net] {
            if net.input_dim() != part1.len() + cf || net.output_dim() != part2.len() {
                return Err(Error::InvalidArgument(format!(
                    "coupling subnet maps {} -> {}, expected {} -> {}",
                    net.input_dim(),
                    net.output_dim(),
                    part1.len() + cf,
                    part2.len()
                )));
            }
        }
        Ok(Self {
            dim,
            part1,
            part2,
            scale_net,
            translate_net,
            cond_net,
            scale_clamp,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cond_dim(&self) -> usize {
        self.cond_net.input_dim()
    }

    pub fn part1(&self) -> &[usize] {
        &self.part1
    }

    pub fn part2(&self) -> &[usize] {
        &self.part2
    }

    pub fn scale_clamp(&self) -> f64 {
        self.scale_clamp
    }

    fn subnet_input(&self, u: &Matrix, c: &Matrix) -> Matrix {
        let feat = self.cond_net.forward(c);
        u.select_cols(&self.part1).hconcat(&feat)
    }

    /// Clamped log-scales `α·tanh(raw/α)` and the shifts, one row per sample.
    fn scale_shift(&self, input: &Matrix) -> (Matrix, Matrix) {
        let mut s = self.scale_net.forward(input);
        let a = self.scale_clamp;
        s.map_inplace(|r| a * (r / a).tanh());
        (s, self.translate_net.forward(input))
    }

    /// Forward map of a batch, returning outputs and per-row log-determinants.
    pub fn forward(&self, u: &Matrix, c: &Matrix) -> (Matrix, Vec<f64>) {
        let input = self.subnet_input(u, c);
        let (s, t) = self.scale_shift(&input);
        let mut u2 = u.select_cols(&self.part2);
        let mut log_det = vec![0.0; u.rows()];
        for r in 0..u2.rows() {
            let (sr, tr) = (s.row(r), t.row(r));
            for (j, v) in u2.row_mut(r).iter_mut().enumerate() {
                *v = (*v + tr[j]) * sr[j].exp();
            }
            log_det[r] = sr.iter().sum();
        }
        let mut out = u.clone();
        out.scatter_cols(&self.part2, &u2);
        (out, log_det)
    }

    /// Inverse map; the returned log-determinants are those of the inverse.
    pub fn inverse(&self, v: &Matrix, c: &Matrix) -> (Matrix, Vec<f64>) {
        let input = self.subnet_input(v, c);
        let (s, t) = self.scale_shift(&input);
        let mut v2 = v.select_cols(&self.part2);
        let mut log_det = vec![0.0; v.rows()];
        for r in 0..v2.rows() {
            let (sr, tr) = (s.row(r), t.row(r));
            for (j, x) in v2.row_mut(r).iter_mut().enumerate() {
                *x = *x * (-sr[j]).exp() - tr[j];
            }
            log_det[r] = -sr.iter().sum::<f64>();
        }
        let mut out = v.clone();
        out.scatter_cols(&self.part2, &v2);
        (out, log_det)
    }

    fn forward_cached(&self, u: &Matrix, c: &Matrix) -> (Matrix, Vec<f64>, LayerCache) {
        let (feat, cond) = self.cond_net.forward_cached(c);
        let input = u.select_cols(&self.part1).hconcat(&feat);
        let (raw, scale) = self.scale_net.forward_cached(&input);
        let (t, translate) = self.translate_net.forward_cached(&input);
        let a = self.scale_clamp;
        let mut tanh = raw;
        tanh.map_inplace(|r| (r / a).tanh());

        let mut out2 = u.select_cols(&self.part2);
        let mut log_det = vec![0.0; u.rows()];
        for r in 0..out2.rows() {
            let (th, tr) = (tanh.row(r), t.row(r));
            let mut ld = 0.0;
            for (j, v) in out2.row_mut(r).iter_mut().enumerate() {
                let s = a * th[j];
                *v = (*v + tr[j]) * s.exp();
                ld += s;
            }
            log_det[r] = ld;
        }
        let mut out = u.clone();
        out.scatter_cols(&self.part2, &out2);
        let cache = LayerCache {
            tanh,
            out2,
            scale,
            translate,
            cond,
        };
        (out, log_det, cache)
    }

    /// Given `∂L/∂out` and `∂L/∂log_det` (per row), accumulates parameter
    /// gradients and returns `∂L/∂u`.
    fn backward(
        &self,
        cache: &LayerCache,
        d_out: &Matrix,
        d_log_det: &[f64],
        grads: &mut LayerGrads,
    ) -> Matrix {
        let a = self.scale_clamp;
        let d_out2 = d_out.select_cols(&self.part2);
        let rows = d_out.rows();
        let p2 = self.part2.len();
        let mut d_u2 = Matrix::zeros(rows, p2);
        let mut d_raw = Matrix::zeros(rows, p2);
        for r in 0..rows {
            let (g, th, o) = (d_out2.row(r), cache.tanh.row(r), cache.out2.row(r));
            let du = d_u2.row_mut(r);
            for j in 0..p2 {
                du[j] = g[j] * (a * th[j]).exp();
            }
            let dr = d_raw.row_mut(r);
            for j in 0..p2 {
                let d_s = g[j] * o[j] + d_log_det[r];
                dr[j] = d_s * (1.0 - th[j] * th[j]);
            }
        }
        // ∂L/∂t equals ∂L/∂u2
        let d_in_s = self
            .scale_net
            .backward(&cache.scale, &d_raw, &mut grads.scale, true)
            .expect("input gradient requested");
        let d_in_t = self
            .translate_net
            .backward(&cache.translate, &d_u2, &mut grads.translate, true)
            .expect("input gradient requested");
        let mut d_in = d_in_s;
        for (x, y) in d_in.data_mut().iter_mut().zip(d_in_t.data()) {
            *x += y;
        }
        let (d_u1_sub, d_feat) = d_in.hsplit(self.part1.len());
        self.cond_net
            .backward(&cache.cond, &d_feat, &mut grads.cond, false);

        let mut d_u1 = d_out.select_cols(&self.part1);
        for (x, y) in d_u1.data_mut().iter_mut().zip(d_u1_sub.data()) {
            *x += y;
        }
        let mut d_u = Matrix::zeros(rows, self.dim);
        d_u.scatter_cols(&self.part1, &d_u1);
        d_u.scatter_cols(&self.part2, &d_u2);
        d_u
    }

    fn zero_grads(&self) -> LayerGrads {
        LayerGrads {
            scale: MlpGrads::zeros_like(&self.scale_net),
            translate: MlpGrads::zeros_like(&self.translate_net),
            cond: MlpGrads::zeros_like(&self.cond_net),
        }
    }

    fn params(&self) -> Vec<&[f64]> {
        let mut p = self.scale_net.params();
        p.extend(self.translate_net.params());
        p.extend(self.cond_net.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut p = self.scale_net.params_mut();
        p.extend(self.translate_net.params_mut());
        p.extend(self.cond_net.params_mut());
        p
    }
}

/// Stack of coupling layers over a standard normal base density.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalFlow {
    dim: usize,
    cond_dim: usize,
    layers: Vec<CouplingLayer>,
}

impl ConditionalFlow {
    /// Identity-initialized flow.
    pub fn new<R: Rng + ?Sized>(
        dim: usize,
        cond_dim: usize,
        arch: &FlowArch,
        rng: &mut R,
    ) -> Result<Self> {
        if arch.n_layers == 0 {
            return Err(Error::InvalidArgument("a flow needs at least one layer".into()));
        }
        if cond_dim == 0 {
            return Err(Error::InvalidArgument("condition dimension must be positive".into()));
        }
        let layers = (0..arch.n_layers)
            .map(|i| CouplingLayer::identity(dim, cond_dim, i, arch, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers)
    }

    pub fn from_layers(layers: Vec<CouplingLayer>) -> Result<Self> {
        let first = layers.first().ok_or(Error::EmptyInput)?;
        let (dim, cond_dim) = (first.dim(), first.cond_dim());
        for (i, l) in layers.iter().enumerate() {
            if l.dim() != dim || l.cond_dim() != cond_dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: l.dim(),
                });
            }
            if l.part1 != partition(dim, i).0 {
                return Err(Error::InvalidArgument(format!(
                    "layer {i} does not follow the alternating partition"
                )));
            }
        }
        Ok(Self {
            dim,
            cond_dim,
            layers,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cond_dim(&self) -> usize {
        self.cond_dim
    }

    pub fn layers(&self) -> &[CouplingLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [CouplingLayer] {
        &mut self.layers
    }

    fn check(&self, z: &Matrix, c: &Matrix) -> Result<()> {
        if z.cols() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: z.cols(),
            });
        }
        if c.cols() != self.cond_dim {
            return Err(Error::DimMismatch {
                expected: self.cond_dim,
                got: c.cols(),
            });
        }
        if c.rows() != z.rows() {
            return Err(Error::DimMismatch {
                expected: z.rows(),
                got: c.rows(),
            });
        }
        Ok(())
    }

    /// Maps data to the base space; returns per-row total log-determinants.
    pub fn forward(&self, z: &Matrix, c: &Matrix) -> Result<(Matrix, Vec<f64>)> {
        self.check(z, c)?;
        let mut u = z.clone();
        let mut total = vec![0.0; z.rows()];
        for layer in &self.layers {
            let (next, ld) = layer.forward(&u, c);
            total.iter_mut().zip(ld).for_each(|(t, l)| *t += l);
            u = next;
        }
        Ok((u, total))
    }

    /// Maps base-space points back to data space.
    pub fn inverse(&self, y: &Matrix, c: &Matrix) -> Result<(Matrix, Vec<f64>)> {
        self.check(y, c)?;
        let mut u = y.clone();
        let mut total = vec![0.0; y.rows()];
        for layer in self.layers.iter().rev() {
            let (prev, ld) = layer.inverse(&u, c);
            total.iter_mut().zip(ld).for_each(|(t, l)| *t += l);
            u = prev;
        }
        Ok((u, total))
    }

    /// `log N(f(z|c); 0, I) + log |det ∂f/∂z|` for every row.
    pub fn log_prob_rows(&self, z: &Matrix, c: &Matrix) -> Result<Vec<f64>> {
        let (y, log_det) = self.forward(z, c)?;
        let norm = -0.5 * self.dim as f64 * (2.0 * PI).ln();
        Ok(y.row_iter()
            .zip(log_det)
            .map(|(row, ld)| norm - 0.5 * row.iter().map(|v| v * v).sum::<f64>() + ld)
            .collect())
    }

    pub fn log_prob(&self, z: &[f64], c: &[f64]) -> Result<f64> {
        let zm = Matrix::from_vec(1, z.len(), z.to_vec())?;
        let cm = Matrix::from_vec(1, c.len(), c.to_vec())?;
        Ok(self.log_prob_rows(&zm, &cm)?[0])
    }

    /// Log-density of one latent vector under each scalar condition in `ys`.
    pub fn log_prob_conditions(&self, z: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
        if self.cond_dim != 1 {
            return Err(Error::DimMismatch {
                expected: 1,
                got: self.cond_dim,
            });
        }
        if z.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        let mut zs = Vec::with_capacity(ys.len() * z.len());
        for _ in ys {
            zs.extend_from_slice(z);
        }
        let zm = Matrix::from_vec(ys.len(), z.len(), zs)?;
        let cm = Matrix::from_vec(ys.len(), 1, ys.to_vec())?;
        self.log_prob_rows(&zm, &cm)
    }

    /// Mean negative log-likelihood of a batch.
    pub fn mean_nll(&self, z: &Matrix, c: &Matrix) -> Result<f64> {
        let lp = self.log_prob_rows(z, c)?;
        Ok(-lp.iter().sum::<f64>() / lp.len().max(1) as f64)
    }

    /// Mean negative log-likelihood of a batch and its gradient with respect
    /// to every weight and bias, by reverse-mode differentiation.
    pub fn nll_gradients(&self, z: &Matrix, c: &Matrix) -> Result<(f64, FlowGrads)> {
        self.check(z, c)?;
        let b = z.rows();
        if b == 0 {
            return Err(Error::EmptyInput);
        }
        let mut u = z.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut log_det = vec![0.0; b];
        for layer in &self.layers {
            let (next, ld, cache) = layer.forward_cached(&u, c);
            log_det.iter_mut().zip(ld).for_each(|(t, l)| *t += l);
            caches.push(cache);
            u = next;
        }
        let norm = 0.5 * self.dim as f64 * (2.0 * PI).ln();
        let nll = u
            .row_iter()
            .zip(&log_det)
            .map(|(row, ld)| norm + 0.5 * row.iter().map(|v| v * v).sum::<f64>() - ld)
            .sum::<f64>()
            / b as f64;

        let inv_b = 1.0 / b as f64;
        let mut d = u;
        d.map_inplace(|v| v * inv_b);
        let d_log_det = vec![-inv_b; b];
        let mut layers: Vec<LayerGrads> = self.layers.iter().map(CouplingLayer::zero_grads).collect();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            d = layer.backward(&caches[i], &d, &d_log_det, &mut layers[i]);
        }
        Ok((nll, FlowGrads { layers }))
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(CouplingLayer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(CouplingLayer::params_mut)
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Parameter `i` in flat order.
    pub fn param(&self, mut i: usize) -> f64 {
        for p in self.params() {
            if i < p.len() {
                return p[i];
            }
            i -= p.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut i: usize, value: f64) {
        for p in self.params_mut() {
            if i < p.len() {
                p[i] = value;
                return;
            }
            i -= p.len();
        }
        panic!("parameter index out of range");
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }
}
