//! A small fully connected softmax classifier: rectifier hidden layers, a
//! linear output layer emitting one logit per class, hand-written
//! backpropagation and SGD with momentum.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::softmax;
use crate::rng;

/// Dense layer `out = W·x + b`, `W` stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b),
        );
    }
}

/// Parameters of the classifier; hidden layers use the rectifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// `init_params` with He-normal weights (`N(0, 2/fan_in)`) and zero biases.
pub fn init_params(layer_dims: &[usize], seed: u64) -> Result<Mlp> {
    if layer_dims.len() < 2 {
        return Err(Error::config("need input and output widths"));
    }
    if let Some(k) = layer_dims.iter().position(|&d| d == 0) {
        return Err(Error::config(format!("layer {k} has zero width")));
    }
    let mut rng = rng::stream(seed, rng::INIT, 0);
    let layers = layer_dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            Layer {
                inputs: fan_in,
                outputs: fan_out,
                weights: (0..fan_in * fan_out)
                    .map(|_| normal.sample(&mut rng))
                    .collect(),
                bias: vec![0.0; fan_out],
            }
        })
        .collect();
    Ok(Mlp { layers })
}

/// Activations kept from a forward pass for backpropagation. `acts[0]` is the
/// input, `acts[k]` the post-rectifier output of hidden layer `k`, and the
/// last entry the logits.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn logits(&self) -> &[f64] {
        self.acts.last().map_or(&[], Vec::as_slice)
    }
}

impl Mlp {
    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// Widths from input to output.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(|l| l.outputs));
        d
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.input_dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            })
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut trace = Trace::default();
        self.forward_traced(x, &mut trace)?;
        Ok(trace.acts.pop().unwrap_or_default())
    }

    /// Forward pass recording activations into `trace` (buffers are reused).
    pub fn forward_traced(&self, x: &[f64], trace: &mut Trace) -> Result<()> {
        self.check_input(x)?;
        let n = self.layers.len();
        trace.acts.resize_with(n + 1, Vec::new);
        trace.acts[0].clear();
        trace.acts[0].extend_from_slice(x);
        for (k, layer) in self.layers.iter().enumerate() {
            let (done, rest) = trace.acts.split_at_mut(k + 1);
            let out = &mut rest[0];
            layer.affine(&done[k], out);
            if k + 1 < n {
                for v in out.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        }
        Ok(())
    }

    /// Accumulate `∂L/∂θ` into `grads` given `∂L/∂logits` at the traced input.
    pub fn backward(&self, trace: &Trace, dlogits: &[f64], grads: &mut Mlp) {
        let mut delta = dlogits.to_vec();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let input = &trace.acts[k];
            let g = &mut grads.layers[k];
            for (o, &d) in delta.iter().enumerate() {
                g.bias[o] += d;
                if d != 0.0 {
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (w, &v) in row.iter_mut().zip(input) {
                        *w += d * v;
                    }
                }
            }
            if k == 0 {
                break;
            }
            // through W and the rectifier of the layer below
            let mut next = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (n, &w) in next.iter_mut().zip(row) {
                    *n += d * w;
                }
            }
            for (n, &a) in next.iter_mut().zip(input) {
                if a <= 0.0 {
                    *n = 0.0;
                }
            }
            delta = next;
        }
    }

    /// Zero-valued parameters of the same shape.
    pub fn zeros_like(&self) -> Mlp {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.params_mut() {
            *v *= s;
        }
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn all_finite(&self) -> bool {
        self.params().all(|v| v.is_finite())
    }

    /// `softmax(forward(x))`, no margins.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.forward(x)?))
    }

    pub fn predict_proba_batch<'a>(
        &self,
        xs: impl IntoIterator<Item = &'a [f64]>,
    ) -> Result<Vec<Vec<f64>>> {
        let mut trace = Trace::default();
        xs.into_iter()
            .map(|x| {
                self.forward_traced(x, &mut trace)?;
                Ok(softmax(trace.logits()))
            })
            .collect()
    }
}

/// Parameter gradients for one input.
pub fn backward(params: &Mlp, x: &[f64], dlogits: &[f64]) -> Result<Mlp> {
    let mut trace = Trace::default();
    params.forward_traced(x, &mut trace)?;
    if dlogits.len() != params.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: params.num_classes(),
            got: dlogits.len(),
        });
    }
    let mut grads = params.zeros_like();
    params.backward(&trace, dlogits, &mut grads);
    Ok(grads)
}

/// Momentum buffers, one per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdState {
    velocity: Mlp,
}

impl SgdState {
    pub fn new(params: &Mlp) -> Self {
        Self {
            velocity: params.zeros_like(),
        }
    }
}

/// `v ← μ·v + g + λ·θ`, `θ ← θ − lr·v`.
pub fn sgd_step(
    params: &mut Mlp,
    grads: &Mlp,
    state: &mut SgdState,
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) {
    let v = state.velocity.params_mut();
    let g = grads.params();
    for ((p, v), g) in params.params_mut().zip(v).zip(g) {
        *v = momentum * *v + g + weight_decay * *p;
        *p -= lr * *v;
    }
}
