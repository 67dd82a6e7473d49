//! Fitting an MLP vector field to a target field on a box.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sup_distance, AxisBox};
use crate::error::{Error, Result};
use crate::field::{Activation, DenseLayer, MlpParams, VectorField};
use crate::linalg::Matrix;
use crate::ode::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub sample_count: usize,
    pub epoch_count: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate at the last epoch as a fraction of `learning_rate`,
    /// reached by cosine decay. `1.0` keeps the rate constant.
    pub final_lr_fraction: f64,
    pub seed: u64,
    /// Hidden layer widths; the network is `[d, hidden..., d]`.
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            sample_count: 4096,
            epoch_count: 600,
            batch_size: 64,
            learning_rate: 3e-3,
            final_lr_fraction: 0.01,
            seed: 7,
            hidden_widths: vec![32, 32, 32],
            activation: Activation::Tanh,
            optimizer: Optimizer::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("train config: {msg}")));
        if self.sample_count == 0 || self.epoch_count == 0 || self.batch_size == 0 {
            return bad("sample_count, epoch_count and batch_size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.final_lr_fraction > 0.0 && self.final_lr_fraction <= 1.0) {
            return bad("final_lr_fraction must lie in (0, 1]");
        }
        if self.hidden_widths.contains(&0) {
            return bad("hidden widths must be positive");
        }
        Ok(())
    }

    pub fn widths(&self, dim: usize) -> Vec<usize> {
        std::iter::once(dim).chain(self.hidden_widths.iter().copied()).chain(std::iter::once(dim)).collect()
    }

    fn lr_at(&self, epoch: usize) -> f64 {
        if self.epoch_count <= 1 {
            return self.learning_rate;
        }
        let progress = epoch as f64 / (self.epoch_count - 1) as f64;
        let cosine = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        self.learning_rate * (self.final_lr_fraction + (1.0 - self.final_lr_fraction) * cosine)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Grid estimate of `sup_region ‖target − fitted‖`.
    pub delta: f64,
    pub eval_resolution: usize,
    pub final_loss: f64,
    pub epochs: usize,
    pub lipschitz_bound: f64,
    pub seed: u64,
    pub region: AxisBox,
}

const FIRST_LAYER_GAIN: f64 = 8.0;
const FIRST_LAYER_BIAS: f64 = 3.0;

/// Dense layer in training layout: flat row-major weights.
struct Layer {
    inputs: usize,
    outputs: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

struct Net {
    layers: Vec<Layer>,
    activation: Activation,
}

impl Net {
    fn init(widths: &[usize], activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, pair)| {
                let (inputs, outputs) = (pair[0], pair[1]);
                let limit = match activation {
                    Activation::Tanh => (6.0 / (inputs + outputs) as f64).sqrt(),
                    Activation::Relu => (6.0 / inputs as f64).sqrt(),
                };
                // The first layer gets wide weights and random biases so that
                // hidden units start with distinct, non-odd features; with
                // zero biases an odd target keeps all bias gradients at zero.
                let first = i == 0;
                let limit = if first { FIRST_LAYER_GAIN * limit } else { limit };
                let w = (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect();
                let b = (0..outputs)
                    .map(|_| if first { rng.random_range(-FIRST_LAYER_BIAS..FIRST_LAYER_BIAS) } else { 0.0 })
                    .collect();
                Layer { inputs, outputs, w, b }
            })
            .collect();
        Self { layers, activation }
    }

    fn param_len(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Stores the post-activation output of every layer in `acts[1..]`, with
    /// `acts[0]` the input. The last layer is affine.
    fn forward(&self, acts: &mut [Vec<f64>]) {
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let (head, tail) = acts.split_at_mut(i + 1);
            let input = &head[i];
            let out = &mut tail[0];
            for o in 0..layer.outputs {
                let row = &layer.w[o * layer.inputs..(o + 1) * layer.inputs];
                let z = layer.b[o] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
                out[o] = if i == last { z } else { self.activation.apply(z) };
            }
        }
    }

    /// Accumulates `∂loss/∂θ` into `grad` (layer by layer: weights, then
    /// bias), given `delta = ∂loss/∂output` in `deltas[last]`.
    fn backward(&self, acts: &[Vec<f64>], deltas: &mut [Vec<f64>], grad: &mut [f64]) {
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.w.len() + l.b.len();
        }
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &acts[i];
            let (head, tail) = deltas.split_at_mut(i + 1);
            let delta = &tail[0];
            let g = &mut grad[offsets[i]..offsets[i] + layer.w.len() + layer.b.len()];
            for o in 0..layer.outputs {
                let d = delta[o];
                let row = &mut g[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(input).for_each(|(gw, x)| *gw += d * x);
                g[layer.w.len() + o] += d;
            }
            if i > 0 {
                let prev = &mut head[i];
                for (j, p) in prev.iter_mut().enumerate() {
                    let back: f64 = (0..layer.outputs).map(|o| layer.w[o * layer.inputs + j] * delta[o]).sum();
                    *p = back * self.activation.derivative(input[j]);
                }
            }
        }
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    /// Folds the input map `x ↦ (x − shift)/scale` and output map
    /// `y ↦ out_scale·y + out_shift` into the first and last layers.
    fn into_params(self, shift: &[f64], scale: &[f64], out_scale: f64, out_shift: &[f64]) -> Result<MlpParams> {
        let n = self.layers.len();
        let mut layers = Vec::with_capacity(n);
        for (i, mut l) in self.layers.into_iter().enumerate() {
            if i == 0 {
                for o in 0..l.outputs {
                    for j in 0..l.inputs {
                        let w = l.w[o * l.inputs + j] / scale[j];
                        l.w[o * l.inputs + j] = w;
                        l.b[o] -= w * shift[j];
                    }
                }
            }
            if i == n - 1 {
                l.w.iter_mut().for_each(|w| *w *= out_scale);
                l.b.iter_mut().zip(out_shift).for_each(|(b, s)| *b = *b * out_scale + s);
            }
            layers.push(DenseLayer { weights: Matrix::from_row_major(l.outputs, l.inputs, l.w)?, bias: l.b });
        }
        MlpParams::new(self.activation, layers)
    }
}

enum OptState {
    Sgd,
    Adam { m: Vec<f64>, v: Vec<f64>, t: i32 },
}

impl OptState {
    fn new(kind: Optimizer, len: usize) -> Self {
        match kind {
            Optimizer::Sgd => OptState::Sgd,
            Optimizer::Adam => OptState::Adam { m: vec![0.0; len], v: vec![0.0; len], t: 0 },
        }
    }

    fn step(&mut self, net: &mut Net, grad: &[f64], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        match self {
            OptState::Sgd => net.params_mut().zip(grad).for_each(|(p, g)| *p -= lr * g),
            OptState::Adam { m, v, t } => {
                *t += 1;
                let c1 = 1.0 - B1.powi(*t);
                let c2 = 1.0 - B2.powi(*t);
                for (((p, g), mi), vi) in net.params_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *mi = B1 * *mi + (1.0 - B1) * g;
                    *vi = B2 * *vi + (1.0 - B2) * g * g;
                    *p -= lr * (*mi / c1) / ((*vi / c2).sqrt() + EPS);
                }
            }
        }
    }
}

/// Trains an MLP field `f ≈ target` by minibatch gradient descent on the mean
/// squared error over points drawn uniformly from `region`, then measures
/// `sup_region ‖target − f‖` on a grid with twice the per-axis sample density.
pub fn fit_field<T: Field + ?Sized>(target: &T, region: &AxisBox, tc: &TrainConfig) -> Result<(VectorField, FitReport)> {
    tc.validate()?;
    let d = target.dim();
    if region.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: region.dim() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);

    let inputs: Vec<Vec<f64>> = (0..tc.sample_count)
        .map(|_| {
            region
                .lower()
                .iter()
                .zip(region.upper())
                .map(|(&l, &u)| if l < u { rng.random_range(l..=u) } else { l })
                .collect()
        })
        .collect();
    let targets: Vec<Vec<f64>> = inputs
        .iter()
        .map(|x| {
            let mut y = vec![0.0; d];
            target.eval_into(x, &mut y);
            y
        })
        .collect();

    let shift: Vec<f64> = region.lower().iter().zip(region.upper()).map(|(l, u)| 0.5 * (l + u)).collect();
    let scale: Vec<f64> =
        region.lower().iter().zip(region.upper()).map(|(l, u)| if u > l { 0.5 * (u - l) } else { 1.0 }).collect();
    let n = tc.sample_count as f64;
    let out_shift: Vec<f64> = (0..d).map(|c| targets.iter().map(|y| y[c]).sum::<f64>() / n).collect();
    let rms = (targets.iter().map(|y| y.iter().zip(&out_shift).map(|(a, m)| (a - m).powi(2)).sum::<f64>()).sum::<f64>()
        / (n * d as f64))
        .sqrt();
    let out_scale = rms.max(1.0);
    if !out_scale.is_finite() {
        return Err(Error::InvalidParameter("target is not finite on the region".into()));
    }
    let xs: Vec<Vec<f64>> =
        inputs.iter().map(|x| x.iter().zip(&shift).zip(&scale).map(|((v, s), c)| (v - s) / c).collect()).collect();
    let ys: Vec<Vec<f64>> =
        targets.iter().map(|y| y.iter().zip(&out_shift).map(|(v, m)| (v - m) / out_scale).collect()).collect();

    let widths = tc.widths(d);
    let mut net = Net::init(&widths, tc.activation, &mut rng);
    let mut opt = OptState::new(tc.optimizer, net.param_len());
    let mut grad = vec![0.0; net.param_len()];
    let mut acts: Vec<Vec<f64>> = widths.iter().map(|&w| vec![0.0; w]).collect();
    let mut deltas = acts.clone();
    let mut order: Vec<usize> = (0..tc.sample_count).collect();
    let last = widths.len() - 1;
    let mut final_loss = f64::NAN;

    for epoch in 0..tc.epoch_count {
        order.shuffle(&mut rng);
        let lr = tc.lr_at(epoch);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(tc.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                acts[0].copy_from_slice(&xs[i]);
                net.forward(&mut acts);
                for c in 0..d {
                    let r = acts[last][c] - ys[i][c];
                    epoch_loss += r * r;
                    deltas[last][c] = 2.0 * r * scale;
                }
                net.backward(&acts, &mut deltas, &mut grad);
            }
            opt.step(&mut net, &grad, lr);
        }
        epoch_loss = epoch_loss * out_scale * out_scale / n;
        if !epoch_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, loss: epoch_loss });
        }
        final_loss = epoch_loss;
    }

    let params = net.into_params(&shift, &scale, out_scale, &out_shift)?;
    let field = VectorField::mlp(params)?;
    let eval_resolution = 2 * (tc.sample_count as f64).powf(1.0 / d as f64).ceil().max(1.0) as usize;
    let delta = sup_distance(
        |x| {
            let mut y = vec![0.0; d];
            target.eval_into(x, &mut y);
            Ok(y)
        },
        |x| field.eval(x),
        region,
        eval_resolution,
    )?;
    let report = FitReport {
        delta,
        eval_resolution,
        final_loss,
        epochs: tc.epoch_count,
        lipschitz_bound: field.lipschitz_bound(),
        seed: tc.seed,
        region: region.clone(),
    };
    Ok((field, report))
}
