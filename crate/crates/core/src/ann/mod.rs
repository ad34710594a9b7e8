//! Multilayer-perceptron utility models.
//!
//! The network maps an object's features to a single linear output, its
//! utility; a preference `a ≻ b` is predicted when `s(a) > s(b)`. Two
//! trainers share the model: gradient descent on the pairwise logistic loss
//! ([`backprop`]) and a fixed-topology genetic algorithm ([`neuro`]).

pub mod backprop;
pub mod neuro;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

pub use backprop::{backprop_train, BackpropConfig, BackpropOutcome};
pub use neuro::{neuroevolve, GenerationStats, NeuroConfig, NeuroOutcome};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => logistic(z),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation value `y = f(z)`.
    #[inline]
    fn slope(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

#[inline]
pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Feed-forward network with parameters stored flat: for each layer, the
/// row-major `out × in` weight matrix followed by its bias vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "wire::MlpWire", into = "wire::MlpWire")]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl MlpModel {
    /// All-zero network. `layer_sizes` runs input → hidden… → 1.
    pub fn zeros(layer_sizes: &[usize], activation: Activation) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::InvalidParam(format!(
                "layer sizes must name an input and an output, all non-zero: {layer_sizes:?}"
            )));
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(Error::InvalidParam("the output layer must have exactly one unit".into()));
        }
        Ok(MlpModel {
            layer_sizes: layer_sizes.to_vec(),
            activation,
            params: vec![0.0; param_count(layer_sizes)],
        })
    }

    /// Weights and biases uniform in `±scale/√fan_in`.
    pub fn random(layer_sizes: &[usize], activation: Activation, scale: f64, rng: &mut Rng) -> Result<Self> {
        let mut m = MlpModel::zeros(layer_sizes, activation)?;
        let mut offset = 0;
        for w in layer_sizes.windows(2) {
            let (fan_in, out) = (w[0], w[1]);
            let r = scale / (fan_in as f64).sqrt();
            for p in &mut m.params[offset..offset + out * fan_in + out] {
                *p = if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 };
            }
            offset += out * fan_in + out;
        }
        Ok(m)
    }

    pub fn from_params(layer_sizes: &[usize], activation: Activation, params: Vec<f64>) -> Result<Self> {
        let mut m = MlpModel::zeros(layer_sizes, activation)?;
        if params.len() != m.params.len() {
            return Err(Error::Dimension {
                expected: m.params.len(),
                found: params.len(),
            });
        }
        m.params = params;
        Ok(m)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `(weights, bias)` slices of layer `l` (0 = first hidden or output).
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let offset: usize = param_count(&self.layer_sizes[..=l]);
        let (i, o) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
        let w = &self.params[offset..offset + o * i];
        let b = &self.params[offset + o * i..offset + o * i + o];
        (w, b)
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> f64 {
        let mut scratch = Scratch::new(&self.layer_sizes);
        self.forward_into(x, &mut scratch)
    }

    /// Forward pass keeping every layer's activations in `scratch`.
    pub(crate) fn forward_into(&self, x: &[f64], scratch: &mut Scratch) -> f64 {
        scratch.acts[0].copy_from_slice(x);
        let last = self.layer_sizes.len() - 2;
        let mut offset = 0;
        for l in 0..=last {
            let (i, o) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let w = &self.params[offset..offset + o * i];
            let b = &self.params[offset + o * i..offset + o * i + o];
            let (prev, next) = scratch.acts.split_at_mut(l + 1);
            let input = &prev[l];
            for (k, out) in next[0].iter_mut().enumerate() {
                let z = b[k] + w[k * i..(k + 1) * i].iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
                *out = if l == last { z } else { self.activation.apply(z) };
            }
            offset += o * i + o;
        }
        scratch.acts[last + 1][0]
    }

    /// Add `scale · ∂s(x)/∂θ` to `grad`, using the activations left in
    /// `scratch` by [`MlpModel::forward_into`] on the same `x`.
    pub(crate) fn accumulate_gradient(&self, scale: f64, scratch: &mut Scratch, grad: &mut [f64]) {
        let n_layers = self.layer_sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for l in 0..n_layers {
            offsets.push(offset);
            offset += self.layer_sizes[l + 1] * self.layer_sizes[l] + self.layer_sizes[l + 1];
        }
        scratch.delta[n_layers - 1][0] = scale;
        for l in (0..n_layers).rev() {
            let (i, o) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let off = offsets[l];
            {
                let input = &scratch.acts[l];
                let delta = &scratch.delta[l];
                for k in 0..o {
                    let d = delta[k];
                    if d == 0.0 {
                        continue;
                    }
                    for (g, x) in grad[off + k * i..off + (k + 1) * i].iter_mut().zip(input) {
                        *g += d * x;
                    }
                    grad[off + o * i + k] += d;
                }
            }
            if l > 0 {
                let w = &self.params[off..off + o * i];
                let (lower, upper) = scratch.delta.split_at_mut(l);
                let delta = &upper[0];
                let prev = &mut lower[l - 1];
                for (j, p) in prev.iter_mut().enumerate() {
                    let back: f64 = (0..o).map(|k| w[k * i + j] * delta[k]).sum();
                    *p = back * self.activation.slope(scratch.acts[l][j]);
                }
            }
        }
    }

    /// Gradient `∂s(x)/∂θ`, in parameter order.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut scratch = Scratch::new(&self.layer_sizes);
        self.forward(x)?;
        self.forward_into(x, &mut scratch);
        let mut grad = vec![0.0; self.params.len()];
        self.accumulate_gradient(1.0, &mut scratch, &mut grad);
        Ok(grad)
    }
}

/// Per-layer activation and delta buffers reused across samples.
pub(crate) struct Scratch {
    acts: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Scratch {
    pub(crate) fn new(sizes: &[usize]) -> Self {
        Scratch {
            acts: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            delta: sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

/// Free-function form of [`MlpModel::forward`].
pub fn mlp_forward(model: &MlpModel, x: &[f64]) -> Result<f64> {
    model.forward(x)
}

/// `ln(1 + exp(−σ·d))` for a score difference `d = s(a) − s(b)`, `a ≻ b`.
pub fn logistic_loss(d: f64, sigma: f64) -> f64 {
    let z = -sigma * d;
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `∂/∂d ln(1 + exp(−σ·d)) = −σ·logistic(−σ·d)`.
pub fn logistic_loss_slope(d: f64, sigma: f64) -> f64 {
    -sigma * logistic(-sigma * d)
}

/// Pairwise logistic loss of `model` on the preference `a ≻ b`.
pub fn pair_loss(model: &MlpModel, a: &[f64], b: &[f64], sigma: f64) -> Result<f64> {
    Ok(logistic_loss(model.forward(a)? - model.forward(b)?, sigma))
}

/// Default architecture: one hidden layer of twice the input width.
pub fn default_layers(input: usize, hidden: Option<&[usize]>) -> Vec<usize> {
    let mut sizes = vec![input];
    match hidden {
        Some(h) => sizes.extend_from_slice(h),
        None => sizes.push(2 * input.max(1)),
    }
    sizes.push(1);
    sizes
}

mod wire {
    use super::*;

    #[derive(Serialize, Deserialize)]
    pub struct LayerWire {
        /// Row-major `outputs × inputs`.
        pub weights: Vec<Vec<f64>>,
        pub bias: Vec<f64>,
    }

    #[derive(Serialize, Deserialize)]
    pub struct MlpWire {
        pub layer_sizes: Vec<usize>,
        pub hidden_activation: Activation,
        pub layers: Vec<LayerWire>,
    }

    impl From<MlpModel> for MlpWire {
        fn from(m: MlpModel) -> Self {
            let layers = (0..m.layer_sizes.len() - 1)
                .map(|l| {
                    let (w, b) = m.layer(l);
                    LayerWire {
                        weights: w.chunks(m.layer_sizes[l]).map(<[f64]>::to_vec).collect(),
                        bias: b.to_vec(),
                    }
                })
                .collect();
            MlpWire {
                layer_sizes: m.layer_sizes,
                hidden_activation: m.activation,
                layers,
            }
        }
    }

    impl TryFrom<MlpWire> for MlpModel {
        type Error = Error;

        fn try_from(w: MlpWire) -> Result<Self> {
            let mut m = MlpModel::zeros(&w.layer_sizes, w.hidden_activation)?;
            if w.layers.len() != w.layer_sizes.len() - 1 {
                return Err(Error::Schema(format!(
                    "expected {} layers, found {}",
                    w.layer_sizes.len() - 1,
                    w.layers.len()
                )));
            }
            let mut params = Vec::with_capacity(m.params.len());
            for (l, layer) in w.layers.iter().enumerate() {
                let (i, o) = (w.layer_sizes[l], w.layer_sizes[l + 1]);
                if layer.weights.len() != o || layer.weights.iter().any(|r| r.len() != i) || layer.bias.len() != o {
                    return Err(Error::Schema(format!("layer {l} does not have shape {o}x{i} + {o}")));
                }
                params.extend(layer.weights.iter().flatten());
                params.extend(&layer.bias);
            }
            m.params = params;
            Ok(m)
        }
    }
}
