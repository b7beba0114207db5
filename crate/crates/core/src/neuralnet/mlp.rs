//! Dense feedforward network with a flat parameter vector.
//!
//! Parameters are stored layer by layer, each layer as its row-major
//! `outputs × inputs` weight matrix followed by its bias vector. Optimizers
//! work directly on that flat slice through [`Architecture::loss_grad`].

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Logistic,
    Linear,
}

impl Activation {
    pub fn name(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Logistic => "logistic",
            Activation::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "logistic" => Some(Activation::Logistic),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }

    fn eval(&self, z: f64) -> f64 {
        match self {
            Activation::Tanh => libm::tanh(z),
            Activation::Logistic => 1.0 / (1.0 + libm::exp(-z)),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn slope(&self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Logistic => a * (1.0 - a),
            Activation::Linear => 1.0,
        }
    }
}

/// Inputs and targets of a full batch, row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    input_dim: usize,
    output_dim: usize,
}

impl Batch {
    pub fn new(input_dim: usize, output_dim: usize) -> Self {
        Self {
            inputs: Vec::new(),
            targets: Vec::new(),
            input_dim,
            output_dim,
        }
    }

    pub fn push(&mut self, x: &[f64], y: &[f64]) -> Result<(), NetError> {
        if x.len() != self.input_dim {
            return Err(NetError::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        if y.len() != self.output_dim {
            return Err(NetError::DimensionMismatch {
                expected: self.output_dim,
                got: y.len(),
            });
        }
        self.inputs.extend_from_slice(x);
        self.targets.extend_from_slice(y);
        Ok(())
    }

    pub fn from_rows<'a>(
        input_dim: usize,
        output_dim: usize,
        rows: impl IntoIterator<Item = (&'a [f64], &'a [f64])>,
    ) -> Result<Self, NetError> {
        let mut batch = Self::new(input_dim, output_dim);
        for (x, y) in rows {
            batch.push(x, y)?;
        }
        Ok(batch)
    }

    pub fn len(&self) -> usize {
        self.inputs.len().checked_div(self.input_dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input(&self, k: usize) -> &[f64] {
        &self.inputs[k * self.input_dim..(k + 1) * self.input_dim]
    }

    pub fn target(&self, k: usize) -> &[f64] {
        &self.targets[k * self.output_dim..(k + 1) * self.output_dim]
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }
}

/// Layer sizes and activations; everything about the network except its
/// parameter values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl Architecture {
    pub fn new(layer_sizes: &[usize], hidden_activation: Activation) -> Result<Self, NetError> {
        let arch = Self {
            layer_sizes: layer_sizes.to_vec(),
            hidden_activation,
            output_activation: Activation::Linear,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.layer_sizes.len() < 3 || self.layer_sizes.iter().any(|&s| s < 1) {
            return Err(NetError::BadTopology);
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// `(weights offset, bias offset, inputs, outputs)` of layer `l`.
    pub fn layer_span(&self, l: usize) -> (usize, usize, usize, usize) {
        let offset: usize = self.layer_sizes[..=l].windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
        (offset, offset + n_in * n_out, n_in, n_out)
    }

    fn activation(&self, l: usize) -> Activation {
        if l + 1 == self.num_layers() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Activations of every layer, input included.
    fn forward_all(&self, params: &[f64], x: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.resize(self.layer_sizes.len(), Vec::new());
        acts[0].clear();
        acts[0].extend_from_slice(x);
        for l in 0..self.num_layers() {
            let (w_off, b_off, n_in, n_out) = self.layer_span(l);
            let act = self.activation(l);
            let (prev, next) = acts.split_at_mut(l + 1);
            let input = &prev[l];
            let out = &mut next[0];
            out.clear();
            for j in 0..n_out {
                let row = &params[w_off + j * n_in..w_off + (j + 1) * n_in];
                let z = row.iter().zip(input).fold(params[b_off + j], |s, (w, a)| s + w * a);
                out.push(act.eval(z));
            }
        }
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>, NetError> {
        if x.len() != self.input_dim() {
            return Err(NetError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut acts = Vec::new();
        self.forward_all(params, x, &mut acts);
        Ok(acts.pop().unwrap_or_default())
    }

    fn check_batch(&self, batch: &Batch) -> Result<(), NetError> {
        if batch.is_empty() {
            return Err(NetError::EmptyBatch);
        }
        if batch.input_dim() != self.input_dim() {
            return Err(NetError::DimensionMismatch {
                expected: self.input_dim(),
                got: batch.input_dim(),
            });
        }
        if batch.output_dim() != self.output_dim() {
            return Err(NetError::DimensionMismatch {
                expected: self.output_dim(),
                got: batch.output_dim(),
            });
        }
        Ok(())
    }

    /// Mean squared error `(1/(M·K))·Σ‖ŷ − y‖²`.
    pub fn loss(&self, params: &[f64], batch: &Batch) -> Result<f64, NetError> {
        self.check_batch(batch)?;
        let mut acts = Vec::new();
        let mut sum = 0.0;
        for k in 0..batch.len() {
            self.forward_all(params, batch.input(k), &mut acts);
            let out = acts.last().unwrap();
            sum += out
                .iter()
                .zip(batch.target(k))
                .map(|(o, t)| (o - t) * (o - t))
                .sum::<f64>();
        }
        Ok(sum / (batch.len() * self.output_dim()) as f64)
    }

    /// Loss and its exact gradient by backpropagation, written into `grad`.
    pub fn loss_grad(&self, params: &[f64], batch: &Batch, grad: &mut [f64]) -> Result<f64, NetError> {
        self.check_batch(batch)?;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 1.0 / (batch.len() * self.output_dim()) as f64;
        let mut acts = Vec::new();
        let mut delta: Vec<f64> = Vec::new();
        let mut delta_prev: Vec<f64> = Vec::new();
        let mut sum = 0.0;
        for k in 0..batch.len() {
            self.forward_all(params, batch.input(k), &mut acts);
            let last = self.num_layers();
            let out_act = self.activation(last - 1);
            delta.clear();
            for (o, t) in acts[last].iter().zip(batch.target(k)) {
                let e = o - t;
                sum += e * e;
                delta.push(2.0 * scale * e * out_act.slope(*o));
            }
            for l in (0..last).rev() {
                let (w_off, b_off, n_in, n_out) = self.layer_span(l);
                let input = &acts[l];
                for j in 0..n_out {
                    let dj = delta[j];
                    grad[b_off + j] += dj;
                    let row = &mut grad[w_off + j * n_in..w_off + (j + 1) * n_in];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += dj * a;
                    }
                }
                if l > 0 {
                    let act = self.activation(l - 1);
                    delta_prev.clear();
                    delta_prev.resize(n_in, 0.0);
                    for j in 0..n_out {
                        let row = &params[w_off + j * n_in..w_off + (j + 1) * n_in];
                        for (dp, w) in delta_prev.iter_mut().zip(row) {
                            *dp += delta[j] * w;
                        }
                    }
                    for (dp, a) in delta_prev.iter_mut().zip(input) {
                        *dp *= act.slope(*a);
                    }
                    core::mem::swap(&mut delta, &mut delta_prev);
                }
            }
        }
        Ok(sum * scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub arch: Architecture,
    pub params: Vec<f64>,
}

/// Random network: weights uniform in `±1/√fan_in`, biases zero.
pub fn init_mlp(layer_sizes: &[usize], hidden_activation: Activation, seed: u64) -> Result<MlpModel, NetError> {
    let arch = Architecture::new(layer_sizes, hidden_activation)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![0.0; arch.param_count()];
    for l in 0..arch.num_layers() {
        let (w_off, b_off, n_in, _) = arch.layer_span(l);
        let bound = 1.0 / libm::sqrt(n_in as f64);
        for w in &mut params[w_off..b_off] {
            *w = rng.gen_range(-bound..=bound);
        }
    }
    Ok(MlpModel { arch, params })
}

impl MlpModel {
    pub fn from_parts(arch: Architecture, params: Vec<f64>) -> Result<Self, NetError> {
        arch.validate()?;
        if params.len() != arch.param_count() {
            return Err(NetError::DimensionMismatch {
                expected: arch.param_count(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(NetError::NonFiniteLoss);
        }
        Ok(Self { arch, params })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let (w_off, b_off, _, _) = self.arch.layer_span(layer);
        &self.params[w_off..b_off]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        let (_, b_off, _, n_out) = self.arch.layer_span(layer);
        &self.params[b_off..b_off + n_out]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        self.arch.forward(&self.params, x)
    }

    pub fn mse(&self, batch: &Batch) -> Result<f64, NetError> {
        self.arch.loss(&self.params, batch)
    }

    /// Gradient of [`MlpModel::mse`] with respect to the flat parameters.
    pub fn gradient(&self, batch: &Batch) -> Result<Vec<f64>, NetError> {
        let mut g = vec![0.0; self.param_count()];
        self.arch.loss_grad(&self.params, batch, &mut g)?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count() {
        let m = init_mlp(&[2, 10, 1], Activation::Tanh, 1).unwrap();
        assert_eq!(m.param_count(), 41);
        assert_eq!(m.weights(0).len(), 20);
        assert_eq!(m.biases(1), &[0.0]);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = init_mlp(&[4, 10, 1], Activation::Tanh, 9).unwrap();
        let b = init_mlp(&[4, 10, 1], Activation::Tanh, 9).unwrap();
        let c = init_mlp(&[4, 10, 1], Activation::Tanh, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.weights(0).iter().all(|w| w.abs() <= 0.5));
        assert!(a.biases(0).iter().all(|&b| b == 0.0));
    }

    #[test]
    fn bad_topology() {
        assert_eq!(init_mlp(&[2, 0, 1], Activation::Tanh, 0), Err(NetError::BadTopology));
        assert_eq!(init_mlp(&[2, 1], Activation::Tanh, 0), Err(NetError::BadTopology));
    }

    #[test]
    fn zero_model_outputs_zero() {
        let arch = Architecture::new(&[3, 4, 2], Activation::Logistic).unwrap();
        let m = MlpModel::from_parts(arch.clone(), vec![0.0; arch.param_count()]).unwrap();
        assert_eq!(m.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn tanh_of_zero_passes_output_bias() {
        let arch = Architecture::new(&[1, 1, 1], Activation::Tanh).unwrap();
        // w1 = 1, b1 = 0, w2 = 2, b2 = 0.25
        let m = MlpModel::from_parts(arch, vec![1.0, 0.0, 2.0, 0.25]).unwrap();
        assert_eq!(m.forward(&[0.0]).unwrap(), vec![0.25]);
        assert_eq!(
            m.forward(&[0.0, 1.0]),
            Err(NetError::DimensionMismatch { expected: 1, got: 2 })
        );
    }

    #[test]
    fn gradient_vanishes_at_exact_fit() {
        let m = init_mlp(&[2, 5, 1], Activation::Tanh, 3).unwrap();
        let xs = [[0.1, 0.2], [0.5, -0.3], [0.9, 0.4]];
        let mut batch = Batch::new(2, 1);
        for x in &xs {
            let y = m.forward(x).unwrap();
            batch.push(x, &y).unwrap();
        }
        assert_eq!(m.mse(&batch).unwrap(), 0.0);
        assert!(m.gradient(&batch).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn linear_unit_matches_least_squares_gradient() {
        // y_hat = w2·(w1·x + b1) + b2 with identity hidden unit
        let arch = Architecture::new(&[1, 1, 1], Activation::Linear).unwrap();
        let (w1, b1, w2, b2) = (0.5, 0.1, 1.5, -0.2);
        let m = MlpModel::from_parts(arch, vec![w1, b1, w2, b2]).unwrap();
        let data = [(1.0, 2.0), (2.0, 3.5), (-1.0, 0.0)];
        let batch = Batch::from_rows(
            1,
            1,
            data.iter()
                .map(|(x, y)| (core::slice::from_ref(x), core::slice::from_ref(y))),
        )
        .unwrap();
        let mut expected = [0.0; 4];
        for &(x, y) in &data {
            let h = w1 * x + b1;
            let e = w2 * h + b2 - y;
            let c = 2.0 * e / data.len() as f64;
            expected[0] += c * w2 * x;
            expected[1] += c * w2;
            expected[2] += c * h;
            expected[3] += c;
        }
        let g = m.gradient(&batch).unwrap();
        for (a, b) in g.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn empty_batch_is_rejected() {
        let m = init_mlp(&[2, 3, 1], Activation::Tanh, 0).unwrap();
        assert_eq!(m.gradient(&Batch::new(2, 1)), Err(NetError::EmptyBatch));
    }
}
