//! Small fully connected network with exact backpropagation and Adam.
//!
//! Inputs are batched row-wise: a batch is a `(batch, in)` matrix and layer
//! `l` computes `a_l = f(a_{l-1} W_l + b_l)` with `W_l` of shape `(in, out)`.
//! Hidden layers use the configured activation; the output head is linear.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn mismatch(expected: impl ToString, got: impl ToString) -> NnError {
    NnError::ShapeMismatch {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    /// No nonlinearity; the whole net becomes affine. Used in tests.
    Identity,
}

impl Activation {
    fn apply(self, x: &mut Array2<f64>) {
        if self == Activation::Tanh {
            x.mapv_inplace(f64::tanh);
        }
    }

    /// Derivative expressed through the activation output `y = f(x)`.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Parameter-shaped storage, used for the net itself, gradients and Adam
/// moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Params {
    pub fn zeros_like(other: &Params) -> Self {
        Self {
            weights: other.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: other.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattened copy: per layer, weights in row-major order then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<(), NnError> {
        if flat.len() != self.len() {
            return Err(mismatch(self.len(), flat.len()));
        }
        let mut it = flat.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            w.iter_mut().chain(b.iter_mut()).for_each(|p| *p = it.next().unwrap());
        }
        Ok(())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut()))
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|x| x.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    hidden_activation: Activation,
    params: Params,
}

/// Per-layer activations retained by a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().unwrap()
    }
}

impl Mlp {
    /// All-zero network with the given layer widths, input first.
    pub fn zeros(sizes: &[usize], hidden_activation: Activation) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0), "bad layer sizes {sizes:?}");
        let weights = sizes.windows(2).map(|p| Array2::zeros((p[0], p[1]))).collect();
        let biases = sizes[1..].iter().map(|&n| Array1::zeros(n)).collect();
        Self {
            sizes: sizes.to_vec(),
            hidden_activation,
            params: Params { weights, biases },
        }
    }

    /// Uniform fan-in/fan-out scaled weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden_activation: Activation, rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes, hidden_activation);
        for w in &mut net.params.weights {
            let (fan_in, fan_out) = w.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            w.iter_mut().for_each(|x| *x = rng.random_range(-limit..limit));
        }
        net
    }

    /// `input -> hidden.. -> outputs` with tanh hidden layers.
    pub fn with_hidden<R: Rng + ?Sized>(
        input: usize,
        hidden: &[usize],
        outputs: usize,
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(outputs);
        Self::new(&sizes, Activation::Tanh, rng)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<(), NnError> {
        if x.ncols() != self.input_len() {
            return Err(mismatch(
                format!("{} input columns", self.input_len()),
                x.ncols(),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, NnError> {
        self.check_input(&x)?;
        let last = self.params.weights.len() - 1;
        let mut a = x.to_owned();
        for (l, (w, b)) in self.params.weights.iter().zip(&self.params.biases).enumerate() {
            a = a.dot(w) + b;
            if l < last {
                self.hidden_activation.apply(&mut a);
            }
        }
        Ok(a)
    }

    /// Forward pass on a single input vector.
    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        let view = ArrayView2::from_shape((1, x.len()), x).map_err(|e| mismatch("row", e))?;
        Ok(self.forward(view)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<ForwardCache, NnError> {
        self.check_input(&x)?;
        let last = self.params.weights.len() - 1;
        let mut activations = Vec::with_capacity(self.sizes.len());
        activations.push(x.to_owned());
        for (l, (w, b)) in self.params.weights.iter().zip(&self.params.biases).enumerate() {
            let mut a = activations[l].dot(w) + b;
            if l < last {
                self.hidden_activation.apply(&mut a);
            }
            activations.push(a);
        }
        Ok(ForwardCache { activations })
    }

    /// Gradients of `mean_b L_b` given `dL_b/d out_b` for every row `b`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: ArrayView2<f64>) -> Result<Params, NnError> {
        let out = cache.output();
        if grad_out.dim() != out.dim() {
            return Err(mismatch(format!("{:?}", out.dim()), format!("{:?}", grad_out.dim())));
        }
        let batch = out.nrows() as f64;
        let num_layers = self.params.weights.len();
        let mut grads = Params::zeros_like(&self.params);
        let mut delta = grad_out.mapv(|g| g / batch);
        for l in (0..num_layers).rev() {
            let input = &cache.activations[l];
            grads.weights[l] = input.t().dot(&delta);
            grads.biases[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut prev = delta.dot(&self.params.weights[l].t());
                let act = self.hidden_activation;
                Zip::from(&mut prev)
                    .and(input)
                    .for_each(|d, &y| *d *= act.derivative_from_output(y));
                delta = prev;
            }
        }
        Ok(grads)
    }
}

/// Step learning rate: `base * factor^(floor(step / every))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub base: f64,
    pub decay_factor: f64,
    pub decay_every: u64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            base: 0.01,
            decay_factor: 0.5,
            decay_every: 5_000,
        }
    }
}

impl LrSchedule {
    pub fn lr(&self, step: u64) -> f64 {
        self.base * self.decay_factor.powi((step / self.decay_every) as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub schedule: LrSchedule,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            schedule: LrSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: Params,
    v: Params,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Params::zeros_like(&net.params),
            v: Params::zeros_like(&net.params),
        }
    }

    pub fn current_lr(&self) -> f64 {
        self.config.schedule.lr(self.step)
    }

    /// One Adam step on `grad + l2 * param` at the scheduled learning rate.
    pub fn update(&mut self, net: &mut Mlp, grads: &Params, l2: f64) -> Result<(), NnError> {
        if grads.len() != net.num_params() {
            return Err(mismatch(net.num_params(), grads.len()));
        }
        let AdamConfig { beta1, beta2, eps, .. } = self.config;
        let lr = self.current_lr();
        self.step += 1;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        let params = net.params.iter_mut();
        let moments = self.m.iter_mut().zip(self.v.iter_mut());
        let gs = grads
            .weights
            .iter()
            .zip(&grads.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()));
        for ((p, (m, v)), &g) in params.zip(moments).zip(gs) {
            let g = g + l2 * *p;
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
        }
        Ok(())
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"MRRMNET1";

/// Metadata stored in front of the raw parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub step: u64,
    pub schedule: LrSchedule,
    pub num_params: usize,
}

/// Writes magic, a little-endian `u32` header length, the JSON header and
/// then every parameter as a little-endian `f64`.
pub fn write_checkpoint<W: Write>(
    net: &Mlp,
    step: u64,
    schedule: LrSchedule,
    mut out: W,
) -> Result<(), NnError> {
    let header = CheckpointHeader {
        sizes: net.sizes.clone(),
        hidden_activation: net.hidden_activation,
        step,
        schedule,
        num_params: net.num_params(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&(json.len() as u32).to_le_bytes())?;
    out.write_all(&json)?;
    let mut buf = Vec::with_capacity(net.num_params() * 8);
    for p in net.params.to_flat() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<(Mlp, CheckpointHeader), NnError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(NnError::Checkpoint("wrong magic".into()));
    }
    let mut len = [0u8; 4];
    input.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    input.read_exact(&mut json)?;
    let header: CheckpointHeader =
        serde_json::from_slice(&json).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    if header.sizes.len() < 2 || header.sizes.contains(&0) {
        return Err(NnError::Checkpoint(format!("bad layer sizes {:?}", header.sizes)));
    }
    let mut net = Mlp::zeros(&header.sizes, header.hidden_activation);
    if net.num_params() != header.num_params {
        return Err(NnError::Checkpoint("parameter count disagrees with sizes".into()));
    }
    let mut raw = vec![0u8; header.num_params * 8];
    input.read_exact(&mut raw)?;
    let flat: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if flat.iter().any(|p| !p.is_finite()) {
        return Err(NnError::Checkpoint("non-finite parameter".into()));
    }
    net.params.set_flat(&flat)?;
    Ok((net, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn scalar_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
        let p = net.params();
        let last = p.weights.len() - 1;
        let mut a = x.to_vec();
        for l in 0..=last {
            let w = &p.weights[l];
            let mut next = vec![0.0; w.ncols()];
            for (j, out) in next.iter_mut().enumerate() {
                let mut s = p.biases[l][j];
                for (i, &ai) in a.iter().enumerate() {
                    s += ai * w[[i, j]];
                }
                *out = if l < last { s.tanh() } else { s };
            }
            a = next;
        }
        a
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[24, 128, 128, 4], Activation::Tanh);
        let out = net.forward_one(&[0.3; 24]).unwrap();
        assert_eq!(out, vec![0.0; 4]);
    }

    #[test]
    fn zero_input_yields_output_bias() {
        let mut net = Mlp::zeros(&[1, 1, 1, 1], Activation::Tanh);
        net.params_mut().set_flat(&[0.7, 0.0, 0.5, 0.0, 0.9, 0.25]).unwrap();
        assert_eq!(net.forward_one(&[0.0]).unwrap(), vec![0.25]);
    }

    #[test]
    fn matches_scalar_oracle() {
        let mut r = rng(3);
        let net = Mlp::with_hidden(24, &[128, 128], 4, &mut r);
        for _ in 0..5 {
            let x: Vec<f64> = (0..24).map(|_| r.random_range(-0.5..0.5)).collect();
            let fast = net.forward_one(&x).unwrap();
            let slow = scalar_forward(&net, &x);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_wrong_width() {
        let net = Mlp::zeros(&[3, 2, 1], Activation::Tanh);
        assert!(matches!(net.forward_one(&[1.0, 2.0]), Err(NnError::ShapeMismatch { .. })));
        let cache = net.forward_cached(Array2::zeros((2, 3)).view()).unwrap();
        assert!(net.backward(&cache, Array2::zeros((2, 2)).view()).is_err());
    }

    #[test]
    fn zero_output_gradient_gives_zero_grads() {
        let mut r = rng(4);
        let net = Mlp::with_hidden(5, &[7, 6], 3, &mut r);
        let x = Array2::from_shape_fn((4, 5), |_| r.random_range(-1.0..1.0));
        let cache = net.forward_cached(x.view()).unwrap();
        let g = net.backward(&cache, Array2::zeros((4, 3)).view()).unwrap();
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_layer_linear_gradient_is_outer_product() {
        let mut r = rng(5);
        let net = Mlp::new(&[3, 2], Activation::Identity, &mut r);
        let x = Array2::from_shape_vec((1, 3), vec![1.0, -2.0, 0.5]).unwrap();
        let g_out = Array2::from_shape_vec((1, 2), vec![0.3, -1.1]).unwrap();
        let cache = net.forward_cached(x.view()).unwrap();
        let g = net.backward(&cache, g_out.view()).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert!((g.weights[0][[i, j]] - x[[0, i]] * g_out[[0, j]]).abs() < 1e-15);
            }
        }
        assert_eq!(g.biases[0].to_vec(), vec![0.3, -1.1]);
    }

    #[test]
    fn finite_differences_small_net() {
        let mut r = rng(6);
        let net = Mlp::with_hidden(4, &[5, 5], 3, &mut r);
        let x = Array2::from_shape_fn((3, 4), |_| r.random_range(-1.0..1.0));
        let c = Array2::from_shape_fn((3, 3), |_| r.random_range(-1.0..1.0));
        // L = mean_b sum_j c_bj * out_bj, so dL_b/d out_b = c_b
        let loss = |n: &Mlp| (n.forward(x.view()).unwrap() * &c).sum() / 3.0;
        let cache = net.forward_cached(x.view()).unwrap();
        let analytic = net.backward(&cache, c.view()).unwrap().to_flat();
        let base = net.params().to_flat();
        let h = 1e-5;
        for i in 0..base.len() {
            let mut plus = net.clone();
            let mut minus = net.clone();
            let mut p = base.clone();
            p[i] += h;
            plus.params_mut().set_flat(&p).unwrap();
            p[i] -= 2.0 * h;
            minus.params_mut().set_flat(&p).unwrap();
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let denom = fd.abs().max(analytic[i].abs()).max(1e-8);
            assert!((fd - analytic[i]).abs() / denom < 1e-4, "param {i}: {fd} vs {}", analytic[i]);
        }
    }

    #[test]
    fn schedule_halves() {
        let s = LrSchedule::default();
        assert_eq!(s.lr(0), 0.01);
        assert_eq!(s.lr(4_999), 0.01);
        assert_eq!(s.lr(5_000), 0.005);
        assert_eq!(s.lr(10_000), 0.0025);
    }

    #[test]
    fn zero_grad_no_l2_is_noop() {
        let mut r = rng(7);
        let mut net = Mlp::with_hidden(3, &[4], 2, &mut r);
        let before = net.clone();
        let mut adam = AdamState::new(&net, AdamConfig::default());
        let zero = Params::zeros_like(net.params());
        for _ in 0..10 {
            adam.update(&mut net, &zero, 0.0).unwrap();
        }
        assert_eq!(net, before);
        assert_eq!(adam.step, 10);
    }

    #[test]
    fn adam_minimizes_square() {
        let mut net = Mlp::zeros(&[1, 1], Activation::Identity);
        net.params_mut().set_flat(&[0.0, 3.0]).unwrap();
        let mut adam = AdamState::new(&net, AdamConfig::default());
        for _ in 0..1_000 {
            let w = net.params().biases[0][0];
            let mut g = Params::zeros_like(net.params());
            g.biases[0][0] = 2.0 * w;
            adam.update(&mut net, &g, 0.0).unwrap();
        }
        let w = net.params().biases[0][0];
        assert!(w.abs() < 0.1, "w = {w}");
    }

    #[test]
    fn training_is_deterministic() {
        let run = || {
            let mut r = rng(8);
            let mut net = Mlp::with_hidden(6, &[8, 8], 3, &mut r);
            let mut adam = AdamState::new(&net, AdamConfig::default());
            for _ in 0..20 {
                let x = Array2::from_shape_fn((5, 6), |_| r.random_range(-1.0..1.0));
                let cache = net.forward_cached(x.view()).unwrap();
                let g_out = cache.output().mapv(|o| o - 0.5);
                let g = net.backward(&cache, g_out.view()).unwrap();
                adam.update(&mut net, &g, 1e-3).unwrap();
            }
            net.params().to_flat()
        };
        let a = run();
        let b = run();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut r = rng(9);
        let net = Mlp::with_hidden(24, &[128, 128], 4, &mut r);
        let mut buf = Vec::new();
        write_checkpoint(&net, 42, LrSchedule::default(), &mut buf).unwrap();
        let (back, header) = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back, net);
        assert_eq!(header.step, 42);
        assert!(read_checkpoint(&buf[..buf.len() - 1]).is_err());
        buf[0] = b'X';
        assert!(read_checkpoint(buf.as_slice()).is_err());
    }
}
