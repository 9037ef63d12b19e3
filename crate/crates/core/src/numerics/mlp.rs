//! Feed-forward networks with explicit forward traces and exact reverse-mode
//! gradients.
//!
//! Layout conventions: activations are `n x d` matrices (rows are samples),
//! layer `k` maps width `layer_dims[k]` to `layer_dims[k+1]` via
//! `Z = A W + b`. Hidden layers apply the configured activation followed by
//! inverted dropout in train mode; the final layer is linear and never
//! dropped.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Matrix;
use crate::{Error, Result};

/// Hidden-layer activation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Activation {
    Elu,
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Elu => {
                if z > 0.0 {
                    z
                } else {
                    libm::exp(z) - 1.0
                }
            }
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Elu => {
                if z > 0.0 {
                    1.0
                } else {
                    libm::exp(z)
                }
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// Parameters of one multilayer perceptron.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpParams {
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    layer_dims: Vec<usize>,
    activation: Activation,
    dropout_rate: f64,
}

/// Per-layer records from a forward pass, needed by [`MlpParams::backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    input: Matrix,
    pre_activations: Vec<Matrix>,
    post_activations: Vec<Matrix>,
    /// Per hidden layer: `None` when no dropout was applied, otherwise the
    /// multiplicative mask (entries `0` or `1/(1-rate)`).
    dropout_masks: Vec<Option<Matrix>>,
}

/// Gradients with the same shapes as the parameters they refer to.
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Initializes an MLP. Weights are drawn from a zero-mean normal with
/// variance `2 / (fan_in + fan_out)`; biases start at zero. Deterministic for
/// a fixed seed.
pub fn init_params(
    layer_dims: &[usize],
    activation: Activation,
    dropout_rate: f64,
    seed: u64,
) -> Result<MlpParams> {
    if layer_dims.len() < 2 {
        return Err(Error::Config(format!(
            "layer_dims needs at least an input and an output width, got {layer_dims:?}"
        )));
    }
    if layer_dims.iter().any(|&d| d == 0) {
        return Err(Error::Config(format!("layer widths must be positive, got {layer_dims:?}")));
    }
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(Error::Config(format!("dropout rate must lie in [0, 1), got {dropout_rate}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(layer_dims.len() - 1);
    let mut biases = Vec::with_capacity(layer_dims.len() - 1);
    for win in layer_dims.windows(2) {
        let (fan_in, fan_out) = (win[0], win[1]);
        let sd = libm::sqrt(2.0 / (fan_in + fan_out) as f64);
        let normal = Normal::new(0.0, sd).expect("positive standard deviation");
        let w = Matrix::from_fn(fan_in, fan_out, |_, _| normal.sample(&mut rng));
        weights.push(w);
        biases.push(vec![0.0; fan_out]);
    }
    Ok(MlpParams { weights, biases, layer_dims: layer_dims.to_vec(), activation, dropout_rate })
}

impl MlpParams {
    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("at least two dims")
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.data().len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Forward pass. In train mode, hidden activations get inverted dropout
    /// with masks recorded in the trace; eval mode applies no dropout and no
    /// scaling. Deterministic for fixed `(params, input, seed)`.
    pub fn forward(&self, input: &Matrix, train_mode: bool, seed: u64) -> Result<(Matrix, ForwardTrace)> {
        if input.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} columns, network expects {}",
                input.cols(),
                self.input_dim()
            )));
        }
        let layers = self.num_layers();
        let apply_dropout = train_mode && self.dropout_rate > 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut pre_activations = Vec::with_capacity(layers);
        let mut post_activations = Vec::with_capacity(layers);
        let mut dropout_masks = Vec::with_capacity(layers);

        let mut current = input.clone();
        for layer in 0..layers {
            let mut z = current.matmul(&self.weights[layer])?;
            for r in 0..z.rows() {
                for (v, b) in z.row_mut(r).iter_mut().zip(&self.biases[layer]) {
                    *v += b;
                }
            }
            let last = layer + 1 == layers;
            let (post, mask) = if last {
                (z.clone(), None)
            } else {
                let mut post = z.clone();
                for v in post.data_mut() {
                    *v = self.activation.apply(*v);
                }
                let mask = if apply_dropout {
                    let keep = 1.0 - self.dropout_rate;
                    let mask = Matrix::from_fn(post.rows(), post.cols(), |_, _| {
                        if rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    });
                    post = post.hadamard(&mask)?;
                    Some(mask)
                } else {
                    None
                };
                (post, mask)
            };
            pre_activations.push(z);
            post_activations.push(post.clone());
            dropout_masks.push(mask);
            current = post;
        }
        let trace = ForwardTrace {
            input: input.clone(),
            pre_activations,
            post_activations,
            dropout_masks,
        };
        Ok((current, trace))
    }

    /// Eval-mode forward returning just the output.
    pub fn eval(&self, input: &Matrix) -> Result<Matrix> {
        Ok(self.forward(input, false, 0)?.0)
    }

    /// Exact gradients of the traced computation with respect to every
    /// parameter and to the input, given `dL/d(output)`.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        output_gradient: &Matrix,
    ) -> Result<(MlpGradients, Matrix)> {
        let layers = self.num_layers();
        if trace.pre_activations.len() != layers {
            return Err(Error::Shape(format!(
                "trace has {} layers, parameters have {}",
                trace.pre_activations.len(),
                layers
            )));
        }
        let last_post = &trace.post_activations[layers - 1];
        if output_gradient.rows() != last_post.rows() || output_gradient.cols() != last_post.cols()
        {
            return Err(Error::Shape(format!(
                "output gradient is {}x{}, trace output is {}x{}",
                output_gradient.rows(),
                output_gradient.cols(),
                last_post.rows(),
                last_post.cols()
            )));
        }
        if trace.input.cols() != self.input_dim() {
            return Err(Error::Shape("trace input width does not match parameters".into()));
        }
        for (layer, pre) in trace.pre_activations.iter().enumerate() {
            if pre.cols() != self.layer_dims[layer + 1] {
                return Err(Error::Shape(format!(
                    "trace layer {layer} has width {}, parameters expect {}",
                    pre.cols(),
                    self.layer_dims[layer + 1]
                )));
            }
        }

        let mut grad_weights = vec![Matrix::zeros(0, 0); layers];
        let mut grad_biases: Vec<Vec<f64>> = vec![Vec::new(); layers];
        let mut upstream = output_gradient.clone();

        for layer in (0..layers).rev() {
            let last = layer + 1 == layers;
            // dL/dZ for this layer.
            let mut dz = upstream;
            if !last {
                if let Some(mask) = &trace.dropout_masks[layer] {
                    dz = dz.hadamard(mask)?;
                }
                let pre = &trace.pre_activations[layer];
                let mut scaled = dz;
                for (g, z) in scaled.data_mut().iter_mut().zip(pre.data()) {
                    *g *= self.activation.derivative(*z);
                }
                dz = scaled;
            }
            let layer_input =
                if layer == 0 { &trace.input } else { &trace.post_activations[layer - 1] };
            grad_weights[layer] = layer_input.transpose().matmul(&dz)?;
            let mut gb = vec![0.0; dz.cols()];
            for r in 0..dz.rows() {
                for (g, v) in gb.iter_mut().zip(dz.row(r)) {
                    *g += v;
                }
            }
            grad_biases[layer] = gb;
            upstream = dz.matmul(&self.weights[layer].transpose())?;
        }
        Ok((MlpGradients { weights: grad_weights, biases: grad_biases }, upstream))
    }

    /// Gradient-descent step: `theta -= lr * grad`.
    pub fn apply_step(&mut self, grads: &MlpGradients, lr: f64) -> Result<()> {
        if grads.weights.len() != self.weights.len() {
            return Err(Error::Shape("gradient/parameter layer count mismatch".into()));
        }
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            w.add_scaled(g, -lr)?;
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            if b.len() != g.len() {
                return Err(Error::Shape("bias gradient length mismatch".into()));
            }
            for (bv, gv) in b.iter_mut().zip(g) {
                *bv -= lr * gv;
            }
        }
        Ok(())
    }

    /// Moves `self` toward `target`: `theta += eps * (target - theta)`.
    /// With `eps = 1` this adopts `target` exactly.
    pub fn move_toward(&mut self, target: &MlpParams, eps: f64) -> Result<()> {
        if self.layer_dims != target.layer_dims {
            return Err(Error::Shape("incompatible architectures in move_toward".into()));
        }
        if eps == 1.0 {
            self.weights = target.weights.clone();
            self.biases = target.biases.clone();
            return Ok(());
        }
        for (w, t) in self.weights.iter_mut().zip(&target.weights) {
            for (wv, tv) in w.data_mut().iter_mut().zip(t.data()) {
                *wv += eps * (*tv - *wv);
            }
        }
        for (b, t) in self.biases.iter_mut().zip(&target.biases) {
            for (bv, tv) in b.iter_mut().zip(t) {
                *bv += eps * (*tv - *bv);
            }
        }
        Ok(())
    }

    /// Flattens all parameters (layer by layer, weights then bias) into one
    /// vector. Inverse of [`MlpParams::set_flat`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "flat vector has {} entries, parameters have {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut offset = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            let wl = w.data().len();
            w.data_mut().copy_from_slice(&flat[offset..offset + wl]);
            offset += wl;
            let bl = b.len();
            b.copy_from_slice(&flat[offset..offset + bl]);
            offset += b.len();
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(Matrix::is_finite)
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

impl MlpGradients {
    pub fn zeros_like(params: &MlpParams) -> Self {
        MlpGradients {
            weights: params.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }

    /// In-place `self += other`.
    pub fn accumulate(&mut self, other: &MlpGradients) -> Result<()> {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.add_scaled(b, 1.0)?;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (av, bv) in a.iter_mut().zip(b) {
                *av += bv;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for w in &mut self.weights {
            for v in w.data_mut() {
                *v *= s;
            }
        }
        for b in &mut self.biases {
            for v in b {
                *v *= s;
            }
        }
    }

    /// Adds `coeff * params` (used for the `2 λ V` weight-decay term).
    pub fn add_scaled_params(&mut self, params: &MlpParams, coeff: f64) -> Result<()> {
        for (g, w) in self.weights.iter_mut().zip(&params.weights) {
            g.add_scaled(w, coeff)?;
        }
        for (g, b) in self.biases.iter_mut().zip(&params.biases) {
            for (gv, bv) in g.iter_mut().zip(b) {
                *gv += coeff * bv;
            }
        }
        Ok(())
    }
}

/// Weighted mean-squared error and its gradient with respect to the
/// predictions: `loss = (1/n) Σ_i w_i ‖pred_i - target_i‖²`.
pub fn weighted_mse(pred: &Matrix, target: &Matrix, weights: &[f64]) -> Result<(f64, Matrix)> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(Error::Shape(format!(
            "prediction is {}x{}, target is {}x{}",
            pred.rows(),
            pred.cols(),
            target.rows(),
            target.cols()
        )));
    }
    if weights.len() != pred.rows() {
        return Err(Error::Shape(format!(
            "{} weights for {} rows",
            weights.len(),
            pred.rows()
        )));
    }
    if pred.rows() == 0 {
        return Err(Error::DegenerateInput("weighted_mse over zero rows".into()));
    }
    let n = pred.rows() as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    for r in 0..pred.rows() {
        let w = weights[r];
        for c in 0..pred.cols() {
            let diff = pred.get(r, c) - target.get(r, c);
            loss += w * diff * diff;
            grad.set(r, c, 2.0 * w * diff / n);
        }
    }
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_input(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn init_is_deterministic_and_biases_zero() {
        let a = init_params(&[3, 48, 48, 48], Activation::Elu, 0.145, 7).unwrap();
        let b = init_params(&[3, 48, 48, 48], Activation::Elu, 0.145, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.biases().iter().all(|bias| bias.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn init_rejects_bad_dims() {
        assert!(init_params(&[3], Activation::Elu, 0.0, 0).is_err());
        assert!(init_params(&[3, 0, 1], Activation::Elu, 0.0, 0).is_err());
        assert!(init_params(&[3, 2], Activation::Elu, 1.0, 0).is_err());
    }

    #[test]
    fn init_variance_close_to_glorot_target() {
        // dims [25, 48]: target variance 2 / 73, sample variance within 30%
        // averaged over 10 seeds.
        let target = 2.0 / 73.0;
        let mut total = 0.0;
        for seed in 0..10 {
            let p = init_params(&[25, 48], Activation::Elu, 0.0, seed).unwrap();
            let w = &p.weights()[0];
            let n = w.data().len() as f64;
            let mean: f64 = w.data().iter().sum::<f64>() / n;
            let var: f64 = w.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            total += var;
        }
        let avg = total / 10.0;
        assert!(
            (avg - target).abs() < 0.3 * target,
            "sample variance {avg} too far from {target}"
        );
    }

    #[test]
    fn forward_zero_params_gives_zero_output() {
        let mut p = init_params(&[3, 4, 2], Activation::Elu, 0.0, 1).unwrap();
        let flat = vec![0.0; p.param_count()];
        p.set_flat(&flat).unwrap();
        let x = tiny_input(5, 3, 2);
        let (out, _) = p.forward(&x, false, 0).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_identity_single_layer() {
        let mut p = init_params(&[3, 3], Activation::Linear, 0.0, 1).unwrap();
        let n = p.param_count();
        let mut flat = vec![0.0; n];
        // Identity weight matrix, zero bias.
        for i in 0..3 {
            flat[i * 3 + i] = 1.0;
        }
        p.set_flat(&flat).unwrap();
        let x = tiny_input(4, 3, 5);
        let (out, _) = p.forward(&x, true, 9).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn eval_mode_ignores_dropout_rate() {
        let x = tiny_input(6, 4, 11);
        let low = init_params(&[4, 8, 1], Activation::Elu, 0.0, 3).unwrap();
        let mut high = init_params(&[4, 8, 1], Activation::Elu, 0.9, 3).unwrap();
        high.set_flat(&low.flatten()).unwrap();
        assert_eq!(low.eval(&x).unwrap(), high.eval(&x).unwrap());
    }

    #[test]
    fn forward_deterministic_per_seed() {
        let p = init_params(&[4, 6, 2], Activation::Elu, 0.3, 5).unwrap();
        let x = tiny_input(7, 4, 8);
        let (a, _) = p.forward(&x, true, 42).unwrap();
        let (b, _) = p.forward(&x, true, 42).unwrap();
        assert_eq!(a, b);
        let (c, _) = p.forward(&x, true, 43).unwrap();
        assert_ne!(a, c);
    }

    /// Scalar objective J = sum(C .* f(x)) so that dJ/d(output) = C.
    fn objective(p: &MlpParams, x: &Matrix, c: &Matrix, train: bool, seed: u64) -> f64 {
        let (out, _) = p.forward(x, train, seed).unwrap();
        out.dot(c).unwrap()
    }

    fn finite_diff_check(dropout: f64, train: bool, seed: u64) {
        let p = init_params(&[2, 3, 1], Activation::Elu, dropout, seed).unwrap();
        let x = tiny_input(4, 2, seed ^ 0xabc);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdef);
        let c = Matrix::from_fn(4, 1, |_, _| rng.random::<f64>() * 2.0 - 1.0);

        let (_, trace) = p.forward(&x, train, seed).unwrap();
        let (grads, input_grad) = p.backward(&trace, &c).unwrap();
        let analytic = grads.flatten();

        let step = 1e-5;
        let flat = p.flatten();
        let mut max_rel = 0.0f64;
        for i in 0..flat.len() {
            let mut plus = flat.clone();
            plus[i] += step;
            let mut minus = flat.clone();
            minus[i] -= step;
            let mut pp = p.clone();
            pp.set_flat(&plus).unwrap();
            let mut pm = p.clone();
            pm.set_flat(&minus).unwrap();
            let num = (objective(&pp, &x, &c, train, seed) - objective(&pm, &x, &c, train, seed))
                / (2.0 * step);
            let denom = num.abs().max(analytic[i].abs()).max(1e-8);
            max_rel = max_rel.max((num - analytic[i]).abs() / denom);
        }
        assert!(max_rel < 1e-4, "max relative gradient error {max_rel}");

        // Input gradient against finite differences as well.
        let mut max_rel_in = 0.0f64;
        for r in 0..x.rows() {
            for col in 0..x.cols() {
                let mut xp = x.clone();
                xp.set(r, col, x.get(r, col) + step);
                let mut xm = x.clone();
                xm.set(r, col, x.get(r, col) - step);
                let num = (objective(&p, &xp, &c, train, seed)
                    - objective(&p, &xm, &c, train, seed))
                    / (2.0 * step);
                let got = input_grad.get(r, col);
                let denom = num.abs().max(got.abs()).max(1e-8);
                max_rel_in = max_rel_in.max((num - got).abs() / denom);
            }
        }
        assert!(max_rel_in < 1e-4, "max relative input-gradient error {max_rel_in}");
    }

    #[test]
    fn backward_matches_finite_differences_eval() {
        for seed in [1, 2, 3] {
            finite_diff_check(0.0, false, seed);
        }
    }

    #[test]
    fn backward_matches_finite_differences_with_dropout() {
        // Fixed dropout seed: masks are constant while parameters move.
        for seed in [4, 5] {
            finite_diff_check(0.4, true, seed);
        }
    }

    #[test]
    fn backward_is_linear_in_output_gradient() {
        let p = init_params(&[3, 4, 2], Activation::Elu, 0.0, 9).unwrap();
        let x = tiny_input(5, 3, 10);
        let (_, trace) = p.forward(&x, false, 0).unwrap();
        let zero = Matrix::zeros(5, 2);
        let (gz, iz) = p.backward(&trace, &zero).unwrap();
        assert!(gz.flatten().iter().all(|&v| v == 0.0));
        assert!(iz.data().iter().all(|&v| v == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let c = Matrix::from_fn(5, 2, |_, _| rng.random::<f64>() - 0.5);
        let (g1, _) = p.backward(&trace, &c).unwrap();
        let (g2, _) = p.backward(&trace, &c.scale(2.0)).unwrap();
        for (a, b) in g1.flatten().iter().zip(g2.flatten()) {
            assert!((2.0 * a - b).abs() < 1e-15 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn backward_rejects_mismatched_trace() {
        let p = init_params(&[3, 4, 2], Activation::Elu, 0.0, 9).unwrap();
        let other = init_params(&[3, 5, 2], Activation::Elu, 0.0, 9).unwrap();
        let x = tiny_input(5, 3, 10);
        let (_, trace) = other.forward(&x, false, 0).unwrap();
        let c = Matrix::zeros(5, 2);
        assert!(p.backward(&trace, &c).is_err());
    }

    #[test]
    fn weighted_mse_direct_values() {
        let (loss, grad) = weighted_mse(
            &Matrix::column(&[1.0]),
            &Matrix::column(&[0.0]),
            &[2.0],
        )
        .unwrap();
        assert_eq!(loss, 2.0);
        assert_eq!(grad.get(0, 0), 4.0);

        let p = Matrix::column(&[0.5, -1.0]);
        let (loss, grad) = weighted_mse(&p, &p, &[1.0, 3.0]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weighted_mse_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let pred = Matrix::from_fn(6, 1, |_, _| rng.random::<f64>());
        let target = Matrix::from_fn(6, 1, |_, _| rng.random::<f64>());
        let weights: Vec<f64> = (0..6).map(|_| rng.random::<f64>() + 0.1).collect();
        let (_, grad) = weighted_mse(&pred, &target, &weights).unwrap();
        let step = 1e-6;
        for r in 0..6 {
            let mut plus = pred.clone();
            plus.set(r, 0, pred.get(r, 0) + step);
            let mut minus = pred.clone();
            minus.set(r, 0, pred.get(r, 0) - step);
            let lp = weighted_mse(&plus, &target, &weights).unwrap().0;
            let lm = weighted_mse(&minus, &target, &weights).unwrap().0;
            let num = (lp - lm) / (2.0 * step);
            let got = grad.get(r, 0);
            let rel = (num - got).abs() / num.abs().max(got.abs()).max(1e-9);
            assert!(rel < 1e-6, "relative error {rel}");
        }
    }

    #[test]
    fn weighted_mse_length_mismatch() {
        let a = Matrix::column(&[1.0, 2.0]);
        let b = Matrix::column(&[1.0]);
        assert!(weighted_mse(&a, &b, &[1.0, 1.0]).is_err());
        assert!(weighted_mse(&a, &a, &[1.0]).is_err());
    }
}
