//! Minimal dense/batch-norm network engine with reverse-mode gradients.
//!
//! The only architecture needed here is a stack of hidden blocks
//! `Dense -> BatchNorm -> LeakyReLU` followed by a bare output `Dense`, all
//! in 64-bit floats. Parameters and gradients are exposed as flat vectors
//! with a documented stable ordering so the optimizer, L2 terms, and the
//! checkpoint format can treat a network as a plain `Vec<f64>`.
//!
//! Flat ordering: layers in construction order; a dense layer contributes
//! its weight matrix in input-index-major (row-major) order followed by its
//! bias; a batch-norm layer contributes gamma then beta. Running statistics
//! are state, not parameters, and travel separately.

use crate::error::NetError;
use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Default negative-side slope of the leaky rectifier.
pub const LEAKY_SLOPE: f64 = 0.01;
/// Default batch-norm running-average momentum.
pub const BN_MOMENTUM: f64 = 0.99;
/// Default batch-norm variance floor.
pub const BN_EPSILON: f64 = 1e-5;

/// Whether a forward pass uses batch statistics (training) or frozen running
/// statistics (inference).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetMode {
    /// Normalize with batch statistics and update running statistics.
    Train,
    /// Normalize with running statistics; deterministic, no side effects.
    Infer,
}

#[derive(Debug, Clone)]
struct Dense {
    /// (fan_in, fan_out).
    weights: Array2<f64>,
    bias: Array1<f64>,
    grad_weights: Array2<f64>,
    grad_bias: Array1<f64>,
    cached_input: Option<Array2<f64>>,
}

impl Dense {
    fn new<R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        // He-style init: weights ~ N(0, sqrt(2/fan_in)), biases zero.
        let std = (2.0 / fan_in as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive std");
        Dense {
            weights: Array2::from_shape_fn((fan_in, fan_out), |_| normal.sample(rng)),
            bias: Array1::zeros(fan_out),
            grad_weights: Array2::zeros((fan_in, fan_out)),
            grad_bias: Array1::zeros(fan_out),
            cached_input: None,
        }
    }

    fn forward(&mut self, x: &Array2<f64>) -> Array2<f64> {
        self.cached_input = Some(x.clone());
        x.dot(&self.weights) + &self.bias
    }

    fn backward(&mut self, upstream: &Array2<f64>) -> Result<Array2<f64>, NetError> {
        let x = self.cached_input.take().ok_or(NetError::CallOrder)?;
        self.grad_weights = x.t().dot(upstream);
        self.grad_bias = upstream.sum_axis(Axis(0));
        Ok(upstream.dot(&self.weights.t()))
    }
}

#[derive(Debug, Clone)]
struct BnCache {
    x_hat: Array2<f64>,
    inv_std: Array1<f64>,
    mode: NetMode,
}

#[derive(Debug, Clone)]
struct BatchNorm {
    gamma: Array1<f64>,
    beta: Array1<f64>,
    running_mean: Array1<f64>,
    running_var: Array1<f64>,
    momentum: f64,
    epsilon: f64,
    grad_gamma: Array1<f64>,
    grad_beta: Array1<f64>,
    cache: Option<BnCache>,
}

impl BatchNorm {
    fn new(width: usize) -> Self {
        BatchNorm {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
            momentum: BN_MOMENTUM,
            epsilon: BN_EPSILON,
            grad_gamma: Array1::zeros(width),
            grad_beta: Array1::zeros(width),
            cache: None,
        }
    }

    fn forward(&mut self, x: &Array2<f64>, mode: NetMode) -> Array2<f64> {
        let (mean, var) = match mode {
            NetMode::Train => {
                let b = x.nrows() as f64;
                let mean = x.mean_axis(Axis(0)).expect("nonempty batch");
                // Population (biased) variance, both for normalization and
                // for the running estimate.
                let centered = x - &mean;
                let var = centered.mapv(|e| e * e).sum_axis(Axis(0)) / b;
                self.running_mean =
                    &self.running_mean * self.momentum + &mean * (1.0 - self.momentum);
                self.running_var =
                    &self.running_var * self.momentum + &var * (1.0 - self.momentum);
                (mean, var)
            }
            NetMode::Infer => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv_std = var.mapv(|v| 1.0 / (v + self.epsilon).sqrt());
        let x_hat = (x - &mean) * &inv_std;
        let out = &x_hat * &self.gamma + &self.beta;
        self.cache = Some(BnCache {
            x_hat,
            inv_std,
            mode,
        });
        out
    }

    fn backward(&mut self, upstream: &Array2<f64>) -> Result<Array2<f64>, NetError> {
        let cache = self.cache.take().ok_or(NetError::CallOrder)?;
        let BnCache {
            x_hat,
            inv_std,
            mode,
        } = cache;
        self.grad_gamma = (upstream * &x_hat).sum_axis(Axis(0));
        self.grad_beta = upstream.sum_axis(Axis(0));
        let dx_hat = upstream * &self.gamma;
        match mode {
            // Through the batch statistics: the classic three-term formula
            // for population-variance normalization.
            NetMode::Train => {
                let b = upstream.nrows() as f64;
                let sum_dx_hat = dx_hat.sum_axis(Axis(0));
                let sum_dx_hat_x_hat = (&dx_hat * &x_hat).sum_axis(Axis(0));
                Ok((dx_hat * b - &sum_dx_hat - &x_hat * &sum_dx_hat_x_hat)
                    * &inv_std
                    / b)
            }
            // Running statistics are constants; the pass is elementwise.
            NetMode::Infer => Ok(dx_hat * &inv_std),
        }
    }
}

#[derive(Debug, Clone)]
enum Layer {
    Dense(Dense),
    Norm(BatchNorm),
    LeakyRelu {
        slope: f64,
        cached_input: Option<Array2<f64>>,
    },
}

/// Fully connected network: hidden blocks of dense + batch-norm + leaky
/// rectifier, then a bare dense output layer.
#[derive(Debug, Clone)]
pub struct MlpNetwork {
    layers: Vec<Layer>,
    input_dim: usize,
    hidden_widths: Vec<usize>,
    output_dim: usize,
    forward_depth: Option<usize>,
}

impl MlpNetwork {
    /// Build a network with freshly initialized parameters.
    pub fn new<R: Rng>(
        input_dim: usize,
        hidden_widths: &[usize],
        output_dim: usize,
        rng: &mut R,
    ) -> Self {
        assert!(input_dim > 0 && output_dim > 0, "zero-width network");
        assert!(
            hidden_widths.iter().all(|&w| w > 0),
            "zero-width hidden layer"
        );
        let mut layers = Vec::new();
        let mut width = input_dim;
        for &h in hidden_widths {
            layers.push(Layer::Dense(Dense::new(width, h, rng)));
            layers.push(Layer::Norm(BatchNorm::new(h)));
            layers.push(Layer::LeakyRelu {
                slope: LEAKY_SLOPE,
                cached_input: None,
            });
            width = h;
        }
        layers.push(Layer::Dense(Dense::new(width, output_dim, rng)));
        MlpNetwork {
            layers,
            input_dim,
            hidden_widths: hidden_widths.to_vec(),
            output_dim,
            forward_depth: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn hidden_widths(&self) -> &[usize] {
        &self.hidden_widths
    }

    /// Run the network on a batch (rows = samples).
    ///
    /// Training mode needs at least two samples for batch statistics and
    /// updates the running statistics as a side effect; inference mode is
    /// deterministic. Either mode caches activations, so `backward` works
    /// after both (inference-mode backward treats the running statistics as
    /// constants).
    pub fn forward(&mut self, batch: &Array2<f64>, mode: NetMode) -> Result<Array2<f64>, NetError> {
        if batch.ncols() != self.input_dim {
            return Err(NetError::ShapeMismatch {
                expected: self.input_dim,
                got: batch.ncols(),
            });
        }
        if mode == NetMode::Train && batch.nrows() < 2 {
            return Err(NetError::BatchTooSmall(batch.nrows()));
        }
        let mut x = batch.clone();
        for layer in &mut self.layers {
            x = match layer {
                Layer::Dense(d) => d.forward(&x),
                Layer::Norm(n) => n.forward(&x, mode),
                Layer::LeakyRelu {
                    slope,
                    cached_input,
                } => {
                    *cached_input = Some(x.clone());
                    let s = *slope;
                    x.mapv(|e| if e > 0.0 { e } else { s * e })
                }
            };
        }
        self.forward_depth = Some(batch.nrows());
        Ok(x)
    }

    /// Backpropagate an upstream gradient (dLoss/dOutput, same shape as the
    /// forward output) through the cached pass.
    ///
    /// Overwrites every parameter gradient — no accumulation — consumes the
    /// caches, and returns dLoss/dInput.
    pub fn backward(&mut self, upstream: &Array2<f64>) -> Result<Array2<f64>, NetError> {
        let batch = self.forward_depth.take().ok_or(NetError::CallOrder)?;
        if upstream.ncols() != self.output_dim || upstream.nrows() != batch {
            return Err(NetError::ShapeMismatch {
                expected: self.output_dim,
                got: upstream.ncols(),
            });
        }
        let mut g = upstream.clone();
        for layer in self.layers.iter_mut().rev() {
            g = match layer {
                Layer::Dense(d) => d.backward(&g)?,
                Layer::Norm(n) => n.backward(&g)?,
                Layer::LeakyRelu {
                    slope,
                    cached_input,
                } => {
                    let x = cached_input.take().ok_or(NetError::CallOrder)?;
                    let s = *slope;
                    g * x.mapv(|e| if e > 0.0 { 1.0 } else { s })
                }
            };
        }
        Ok(g)
    }

    /// Total number of trainable parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Dense(d) => d.weights.len() + d.bias.len(),
                Layer::Norm(n) => n.gamma.len() + n.beta.len(),
                Layer::LeakyRelu { .. } => 0,
            })
            .sum()
    }

    /// Copy all parameters into a flat vector (ordering documented at module
    /// level).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.extend(d.weights.iter());
                    out.extend(d.bias.iter());
                }
                Layer::Norm(n) => {
                    out.extend(n.gamma.iter());
                    out.extend(n.beta.iter());
                }
                Layer::LeakyRelu { .. } => {}
            }
        }
        out
    }

    /// Copy all parameter gradients into a flat vector with the same layout
    /// as [`flat_params`](Self::flat_params).
    pub fn flat_grads(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.extend(d.grad_weights.iter());
                    out.extend(d.grad_bias.iter());
                }
                Layer::Norm(n) => {
                    out.extend(n.grad_gamma.iter());
                    out.extend(n.grad_beta.iter());
                }
                Layer::LeakyRelu { .. } => {}
            }
        }
        out
    }

    /// Overwrite all parameters from a flat vector.
    pub fn load_flat_params(&mut self, flat: &[f64]) -> Result<(), NetError> {
        if flat.len() != self.param_count() {
            return Err(NetError::ShapeMismatch {
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut it = flat.iter();
        for layer in &mut self.layers {
            match layer {
                Layer::Dense(d) => {
                    for w in d.weights.iter_mut() {
                        *w = *it.next().expect("length checked");
                    }
                    for b in d.bias.iter_mut() {
                        *b = *it.next().expect("length checked");
                    }
                }
                Layer::Norm(n) => {
                    for g in n.gamma.iter_mut() {
                        *g = *it.next().expect("length checked");
                    }
                    for b in n.beta.iter_mut() {
                        *b = *it.next().expect("length checked");
                    }
                }
                Layer::LeakyRelu { .. } => {}
            }
        }
        Ok(())
    }

    /// Copy the batch-norm running statistics (mean then variance per norm
    /// layer, in construction order) into a flat vector.
    pub fn running_stats(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            if let Layer::Norm(n) = layer {
                out.extend(n.running_mean.iter());
                out.extend(n.running_var.iter());
            }
        }
        out
    }

    /// Overwrite the batch-norm running statistics from a flat vector.
    pub fn load_running_stats(&mut self, flat: &[f64]) -> Result<(), NetError> {
        let expected: usize = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Norm(n) => 2 * n.gamma.len(),
                _ => 0,
            })
            .sum();
        if flat.len() != expected {
            return Err(NetError::ShapeMismatch {
                expected,
                got: flat.len(),
            });
        }
        let mut it = flat.iter();
        for layer in &mut self.layers {
            if let Layer::Norm(n) = layer {
                for m in n.running_mean.iter_mut() {
                    *m = *it.next().expect("length checked");
                }
                for v in n.running_var.iter_mut() {
                    *v = *it.next().expect("length checked");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::seeded_rng;
    use ndarray::array;

    fn random_batch<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.5..1.5))
    }

    /// Mean-squared-error style loss used by the gradient checks:
    /// `L = sum((out - target)^2)`, upstream gradient `2 (out - target)`.
    fn loss_and_upstream(out: &Array2<f64>, target: &Array2<f64>) -> (f64, Array2<f64>) {
        let diff = out - target;
        (diff.mapv(|e| e * e).sum(), diff * 2.0)
    }

    #[test]
    fn identity_dense_layer_passes_input_through() {
        let mut rng = seeded_rng(201);
        let mut net = MlpNetwork::new(3, &[], 3, &mut rng);
        let mut params = vec![0.0; net.param_count()];
        for i in 0..3 {
            params[i * 3 + i] = 1.0; // weight (i, i); biases stay zero
        }
        net.load_flat_params(&params).unwrap();
        let x = random_batch(4, 3, &mut rng);
        let y = net.forward(&x, NetMode::Infer).unwrap();
        for (a, b) in y.iter().zip(x.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn batch_norm_train_mode_standardizes_batch() {
        let mut bn = BatchNorm::new(3);
        let x = array![
            [1.0, -2.0, 5.0],
            [3.0, 0.0, 5.5],
            [5.0, 2.0, 4.5],
            [7.0, 4.0, 5.0]
        ];
        let y = bn.forward(&x, NetMode::Train);
        for f in 0..3 {
            let col: Vec<f64> = y.column(f).to_vec();
            let mean: f64 = col.iter().sum::<f64>() / 4.0;
            let var: f64 = col.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-6, "feature {f} mean {mean}");
            assert!((var - 1.0).abs() < 1e-2, "feature {f} var {var}");
        }
    }

    #[test]
    fn forward_matches_straight_line_reimplementation() {
        // Independent oracle: explicit loops, no shared code with the layer
        // structs beyond the parameter vector.
        let mut rng = seeded_rng(203);
        let (d_in, h, d_out) = (4usize, 5usize, 2usize);
        let mut net = MlpNetwork::new(d_in, &[h], d_out, &mut rng);
        let x = random_batch(6, d_in, &mut rng);
        let y = net.forward(&x, NetMode::Train).unwrap();

        let p = net.flat_params();
        let (w1, rest) = p.split_at(d_in * h);
        let (b1, rest) = rest.split_at(h);
        let (gamma, rest) = rest.split_at(h);
        let (beta, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(h * d_out);

        let rows = x.nrows();
        let mut z1 = vec![vec![0.0; h]; rows];
        for r in 0..rows {
            for j in 0..h {
                let mut s = b1[j];
                for i in 0..d_in {
                    s += x[(r, i)] * w1[i * h + j];
                }
                z1[r][j] = s;
            }
        }
        let mut bn_out = vec![vec![0.0; h]; rows];
        for j in 0..h {
            let mean: f64 = (0..rows).map(|r| z1[r][j]).sum::<f64>() / rows as f64;
            let var: f64 =
                (0..rows).map(|r| (z1[r][j] - mean).powi(2)).sum::<f64>() / rows as f64;
            for r in 0..rows {
                let xh = (z1[r][j] - mean) / (var + BN_EPSILON).sqrt();
                bn_out[r][j] = gamma[j] * xh + beta[j];
            }
        }
        for r in 0..rows {
            for j in 0..h {
                let v = bn_out[r][j];
                bn_out[r][j] = if v > 0.0 { v } else { LEAKY_SLOPE * v };
            }
        }
        for r in 0..rows {
            for o in 0..d_out {
                let mut s = b2[o];
                for j in 0..h {
                    s += bn_out[r][j] * w2[j * d_out + o];
                }
                assert!(almost_equal(s, y[(r, o)]), "({r},{o}): {s} vs {}", y[(r, o)]);
            }
        }
    }

    fn almost_equal(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn linear_net_matches_least_squares_gradient() {
        // No hidden layers: out = X W + b; L = sum((out - T)^2) has the
        // closed-form gradients dW = 2 X^T (out - T), db = 2 sum(out - T).
        let mut rng = seeded_rng(205);
        let mut net = MlpNetwork::new(3, &[], 2, &mut rng);
        let x = random_batch(5, 3, &mut rng);
        let t = random_batch(5, 2, &mut rng);
        let out = net.forward(&x, NetMode::Infer).unwrap();
        let (_, upstream) = loss_and_upstream(&out, &t);
        let dx = net.backward(&upstream).unwrap();
        let grads = net.flat_grads();

        let diff = &out - &t;
        let dw = x.t().dot(&diff) * 2.0;
        let db = diff.sum_axis(Axis(0)) * 2.0;
        for i in 0..3 {
            for j in 0..2 {
                assert!((grads[i * 2 + j] - dw[(i, j)]).abs() < 1e-10);
            }
        }
        for j in 0..2 {
            assert!((grads[6 + j] - db[j]).abs() < 1e-10);
        }
        // Input gradient: dX = 2 (out - T) W^T, with W read from the flat
        // parameters.
        let p = net.flat_params();
        let w = Array2::from_shape_fn((3, 2), |(i, j)| p[i * 2 + j]);
        let dx_expected = diff.dot(&w.t()) * 2.0;
        for (a, b) in dx.iter().zip(dx_expected.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    /// Central finite differences over every parameter of `net` against the
    /// analytic gradient for the squared-error loss, in the given mode.
    fn finite_difference_check(net: &mut MlpNetwork, x: &Array2<f64>, mode: NetMode) {
        let t = Array2::zeros((x.nrows(), net.output_dim()));
        let out = net.forward(x, mode).unwrap();
        let (_, upstream) = loss_and_upstream(&out, &t);
        net.backward(&upstream).unwrap();
        let analytic = net.flat_grads();
        let params = net.flat_params();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..params.len() {
            let mut bumped = params.clone();
            bumped[i] = params[i] + h;
            net.load_flat_params(&bumped).unwrap();
            let l_plus = loss_and_upstream(&net.forward(x, mode).unwrap(), &t).0;
            bumped[i] = params[i] - h;
            net.load_flat_params(&bumped).unwrap();
            let l_minus = loss_and_upstream(&net.forward(x, mode).unwrap(), &t).0;
            let fd = (l_plus - l_minus) / (2.0 * h);
            let denom = analytic[i].abs().max(fd.abs()).max(1e-6);
            worst = worst.max((analytic[i] - fd).abs() / denom);
        }
        net.load_flat_params(&params).unwrap();
        assert!(worst < 1e-4, "worst relative gradient error {worst:.3e}");
    }

    #[test]
    fn gradients_match_finite_differences_with_batch_norm() {
        let mut rng = seeded_rng(207);
        let mut net = MlpNetwork::new(4, &[6, 5], 3, &mut rng);
        let x = random_batch(8, 4, &mut rng);
        finite_difference_check(&mut net, &x, NetMode::Train);
    }

    #[test]
    fn gradients_match_finite_differences_in_inference_mode() {
        // Exercises the running-stats-as-constants backward path used when a
        // frozen critic is evaluated inside the actor loss.
        let mut rng = seeded_rng(209);
        let mut net = MlpNetwork::new(4, &[6], 2, &mut rng);
        // A few training passes so the running stats are non-trivial.
        for _ in 0..5 {
            let warm = random_batch(16, 4, &mut rng);
            net.forward(&warm, NetMode::Train).unwrap();
        }
        let x = random_batch(8, 4, &mut rng);
        finite_difference_check(&mut net, &x, NetMode::Infer);
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = seeded_rng(211);
        let mut net = MlpNetwork::new(3, &[5], 2, &mut rng);
        for _ in 0..3 {
            let warm = random_batch(16, 3, &mut rng);
            net.forward(&warm, NetMode::Train).unwrap();
        }
        let x = random_batch(4, 3, &mut rng);
        let t: Array2<f64> = Array2::zeros((4, 2));
        let out = net.forward(&x, NetMode::Infer).unwrap();
        let (_, upstream) = loss_and_upstream(&out, &t);
        let dx = net.backward(&upstream).unwrap();
        let h = 1e-5;
        for r in 0..4 {
            for c in 0..3 {
                let mut xp = x.clone();
                xp[(r, c)] += h;
                let lp = loss_and_upstream(&net.forward(&xp, NetMode::Infer).unwrap(), &t).0;
                let mut xm = x.clone();
                xm[(r, c)] -= h;
                let lm = loss_and_upstream(&net.forward(&xm, NetMode::Infer).unwrap(), &t).0;
                let fd = (lp - lm) / (2.0 * h);
                let denom = dx[(r, c)].abs().max(fd.abs()).max(1e-6);
                assert!((dx[(r, c)] - fd).abs() / denom < 1e-4);
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = seeded_rng(213);
        let mut net = MlpNetwork::new(3, &[4], 2, &mut rng);
        let x = random_batch(5, 3, &mut rng);
        net.forward(&x, NetMode::Train).unwrap();
        net.backward(&Array2::zeros((5, 2))).unwrap();
        assert!(net.flat_grads().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn mode_and_shape_errors() {
        let mut rng = seeded_rng(215);
        let mut net = MlpNetwork::new(3, &[4], 2, &mut rng);
        let single = random_batch(1, 3, &mut rng);
        assert!(matches!(
            net.forward(&single, NetMode::Train),
            Err(NetError::BatchTooSmall(1))
        ));
        // Inference on a single row is fine.
        net.forward(&single, NetMode::Infer).unwrap();

        let wrong = random_batch(2, 5, &mut rng);
        assert!(matches!(
            net.forward(&wrong, NetMode::Train),
            Err(NetError::ShapeMismatch {
                expected: 3,
                got: 5
            })
        ));

        let mut fresh = MlpNetwork::new(3, &[4], 2, &mut rng);
        assert!(matches!(
            fresh.backward(&Array2::zeros((2, 2))),
            Err(NetError::CallOrder)
        ));
        // Backward consumes the cache: a second backward must fail.
        let x = random_batch(4, 3, &mut rng);
        net.forward(&x, NetMode::Train).unwrap();
        net.backward(&Array2::zeros((4, 2))).unwrap();
        assert!(matches!(
            net.backward(&Array2::zeros((4, 2))),
            Err(NetError::CallOrder)
        ));
    }

    #[test]
    fn inference_is_deterministic_and_bit_identical() {
        let mut rng = seeded_rng(217);
        let mut net = MlpNetwork::new(4, &[8, 8], 3, &mut rng);
        for _ in 0..10 {
            let warm = random_batch(32, 4, &mut rng);
            net.forward(&warm, NetMode::Train).unwrap();
        }
        let x = random_batch(6, 4, &mut rng);
        let a = net.forward(&x, NetMode::Infer).unwrap();
        let b = net.forward(&x, NetMode::Infer).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn running_stats_converge_to_distribution_stats() {
        // Feed standard-normal-derived features with known mean 3, std 2;
        // after many batches the running stats must sit within 5%.
        let mut rng = seeded_rng(219);
        let mut bn = BatchNorm::new(2);
        let normal = Normal::new(3.0, 2.0).unwrap();
        for _ in 0..10_000 {
            let batch = Array2::from_shape_fn((64, 2), |_| normal.sample(&mut rng));
            bn.forward(&batch, NetMode::Train);
        }
        for f in 0..2 {
            assert!(
                (bn.running_mean[f] - 3.0).abs() / 3.0 < 0.05,
                "running mean {}",
                bn.running_mean[f]
            );
            assert!(
                (bn.running_var[f] - 4.0).abs() / 4.0 < 0.05,
                "running var {}",
                bn.running_var[f]
            );
        }
    }

    #[test]
    fn flat_parameter_round_trip() {
        let mut rng = seeded_rng(221);
        let mut net = MlpNetwork::new(5, &[7, 6], 4, &mut rng);
        let original = net.flat_params();
        assert_eq!(original.len(), net.param_count());
        let perturbed: Vec<f64> = original.iter().map(|p| p + 0.125).collect();
        net.load_flat_params(&perturbed).unwrap();
        assert_eq!(net.flat_params(), perturbed);
        assert!(matches!(
            net.load_flat_params(&perturbed[1..]),
            Err(NetError::ShapeMismatch { .. })
        ));

        let stats = net.running_stats();
        let shifted: Vec<f64> = stats.iter().map(|s| s + 1.0).collect();
        net.load_running_stats(&shifted).unwrap();
        assert_eq!(net.running_stats(), shifted);
    }

    #[test]
    fn he_initialization_scale() {
        let mut rng = seeded_rng(223);
        let net = MlpNetwork::new(256, &[128], 1, &mut rng);
        let p = net.flat_params();
        let first_layer = &p[0..256 * 128];
        let var: f64 =
            first_layer.iter().map(|w| w * w).sum::<f64>() / first_layer.len() as f64;
        let expected = 2.0 / 256.0;
        assert!((var / expected - 1.0).abs() < 0.1, "weight variance {var}");
        // Biases start at zero.
        assert!(p[256 * 128..256 * 128 + 128].iter().all(|&b| b == 0.0));
    }
}
