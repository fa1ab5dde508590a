//! Small dense networks with hand-written gradients.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Head, HeadIndices, HeadLayout};
use crate::math;
use crate::seed::EngineRng;
use crate::{Error, Result};

/// Hidden width of the policy and value trunks.
pub const POLICY_WIDTH: usize = 50;
/// Hidden width of the discriminator.
pub const DISC_WIDTH: usize = 32;
/// Discriminator logits are clamped to this magnitude before squashing.
pub const LOGIT_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => math::tanh(x),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activated output `y`.
    fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl LayerShape {
    fn param_count(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }
}

/// A fully connected network. Parameters are stored flat, layer by layer:
/// the weight matrix row-major (`outputs × inputs`) followed by the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<LayerShape>,
    params: Vec<f64>,
}

/// Layer outputs from one forward pass, input first.
#[derive(Debug, Clone)]
pub struct Trace {
    values: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.values.last().expect("trace holds the input")
    }
}

impl Mlp {
    /// Zero-initialised network with `sizes.len() - 1` layers.
    pub fn zeros(sizes: &[usize], activations: &[Activation]) -> Result<Self> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 || sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "bad network shape {sizes:?} with {} activations",
                activations.len()
            )));
        }
        let layers: Vec<LayerShape> = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| LayerShape {
                inputs: w[0],
                outputs: w[1],
                activation,
            })
            .collect();
        let count = layers.iter().map(LayerShape::param_count).sum();
        Ok(Self {
            layers,
            params: vec![0.0; count],
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot(sizes: &[usize], activations: &[Activation], rng: &mut EngineRng) -> Result<Self> {
        let mut net = Self::zeros(sizes, activations)?;
        let mut off = 0;
        for l in &net.layers {
            let bound = math::sqrt(6.0 / (l.inputs + l.outputs) as f64);
            for p in &mut net.params[off..off + l.inputs * l.outputs] {
                *p = rng.random_range(-bound..bound);
            }
            off += l.param_count();
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Check the stored shapes against the parameter vector.
    pub fn validate(&self) -> Result<()> {
        let count: usize = self.layers.iter().map(LayerShape::param_count).sum();
        if self.layers.is_empty() || count != self.params.len() {
            return Err(Error::ShapeMismatch {
                expected: count,
                found: self.params.len(),
            });
        }
        if self.layers.windows(2).any(|w| w[0].outputs != w[1].inputs) {
            return Err(Error::InvalidInput("layer shapes do not chain".into()));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameter"));
        }
        Ok(())
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<Trace> {
        if x.len() != self.input_len() {
            return Err(Error::ShapeMismatch {
                expected: self.input_len(),
                found: x.len(),
            });
        }
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(x.to_vec());
        let mut off = 0;
        for l in &self.layers {
            let input = values.last().expect("nonempty");
            let (w, b) = self.params[off..off + l.param_count()].split_at(l.inputs * l.outputs);
            let out: Vec<f64> = (0..l.outputs)
                .map(|o| {
                    let row = &w[o * l.inputs..(o + 1) * l.inputs];
                    let z = b[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    l.activation.apply(z)
                })
                .collect();
            values.push(out);
            off += l.param_count();
        }
        Ok(Trace { values })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.values.pop().expect("nonempty"))
    }

    /// Accumulate `d_out` (the gradient with respect to the network output)
    /// back through `trace` into `grad`.
    pub fn backward(&self, trace: &Trace, d_out: &[f64], grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.params.len());
        let mut delta: Vec<f64> = d_out.to_vec();
        let mut end = self.params.len();
        for (i, l) in self.layers.iter().enumerate().rev() {
            let start = end - l.param_count();
            let output = &trace.values[i + 1];
            for (d, y) in delta.iter_mut().zip(output) {
                *d *= l.activation.derivative(*y);
            }
            let input = &trace.values[i];
            let (gw, gb) = grad[start..end].split_at_mut(l.inputs * l.outputs);
            for o in 0..l.outputs {
                if delta[o] == 0.0 {
                    continue;
                }
                gb[o] += delta[o];
                let row = &mut gw[o * l.inputs..(o + 1) * l.inputs];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += delta[o] * x;
                }
            }
            if i > 0 {
                let w = &self.params[start..start + l.inputs * l.outputs];
                let mut prev = vec![0.0; l.inputs];
                for o in 0..l.outputs {
                    if delta[o] == 0.0 {
                        continue;
                    }
                    for (p, wv) in prev.iter_mut().zip(&w[o * l.inputs..(o + 1) * l.inputs]) {
                        *p += delta[o] * wv;
                    }
                }
                delta = prev;
            }
            end = start;
        }
    }
}

/// Per-head probability vectors, in [`Head::ALL`] order.
pub type HeadDists = [Vec<f64>; 6];

/// Multi-head policy: a tanh trunk with one softmax block per head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyNet {
    pub layout: HeadLayout,
    pub net: Mlp,
}

impl PolicyNet {
    pub fn new(state_len: usize, layout: HeadLayout, rng: &mut EngineRng) -> Result<Self> {
        let out = layout.sizes().iter().sum();
        let w = POLICY_WIDTH;
        let net = Mlp::glorot(
            &[state_len, w, w, w, out],
            &[Activation::Tanh, Activation::Tanh, Activation::Tanh, Activation::Identity],
            rng,
        )?;
        Ok(Self { layout, net })
    }

    fn split(&self, logits: &[f64]) -> HeadDists {
        let mut out: HeadDists = Default::default();
        for (slot, &h) in out.iter_mut().zip(Head::ALL.iter()) {
            let off = self.layout.offset(h);
            let mut block = logits[off..off + self.layout.size(h)].to_vec();
            math::softmax(&mut block);
            *slot = block;
        }
        out
    }

    pub fn forward(&self, s: &[f64]) -> Result<HeadDists> {
        Ok(self.split(&self.net.forward(s)?))
    }

    /// Log-probability of `heads`, summed over the heads relevant to its kind.
    pub fn log_prob(&self, s: &[f64], heads: &HeadIndices) -> Result<f64> {
        Ok(joint_log_prob(&self.forward(s)?, heads))
    }

    /// Add `scale · ∇θ log π(heads | s)` into `grad`; returns the log-prob.
    pub fn accumulate_log_prob_grad(
        &self,
        s: &[f64],
        heads: &HeadIndices,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        let trace = self.net.forward_trace(s)?;
        let dists = self.split(trace.output());
        let mut d_out = vec![0.0; self.net.output_len()];
        for &h in Head::relevant(heads.kind()) {
            let off = self.layout.offset(h);
            let k = heads.get(h);
            for (j, p) in dists[h as usize].iter().enumerate() {
                let onehot = if j == k { 1.0 } else { 0.0 };
                d_out[off + j] = scale * (onehot - p);
            }
        }
        self.net.backward(&trace, &d_out, grad);
        Ok(joint_log_prob(&dists, heads))
    }

    /// Gradient of log π(heads | s).
    pub fn grad_log_prob(&self, s: &[f64], heads: &HeadIndices) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.net.param_count()];
        self.accumulate_log_prob_grad(s, heads, 1.0, &mut g)?;
        Ok(g)
    }

    /// The most likely index on every head.
    pub fn greedy(&self, s: &[f64]) -> Result<HeadIndices> {
        let dists = self.forward(s)?;
        let mut heads = HeadIndices::default();
        for &h in Head::ALL.iter() {
            heads.set(h, argmax(&dists[h as usize]));
        }
        Ok(heads.masked())
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Sum of log-probabilities of the selected indices on the relevant heads.
pub fn joint_log_prob(dists: &HeadDists, heads: &HeadIndices) -> f64 {
    Head::relevant(heads.kind())
        .iter()
        .map(|&h| math::ln(dists[h as usize][heads.get(h)]))
        .sum()
}

/// Sample every head independently. Irrelevant heads are sampled too but
/// zeroed in the result and left out of the log-prob.
pub fn sample_action(dists: &HeadDists, rng: &mut EngineRng) -> (HeadIndices, f64) {
    let mut heads = HeadIndices::default();
    for &h in Head::ALL.iter() {
        let probs = &dists[h as usize];
        let mut u: f64 = rng.random();
        let mut pick = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            if u < *p {
                pick = i;
                break;
            }
            u -= p;
        }
        heads.set(h, pick);
    }
    let heads = heads.masked();
    let lp = joint_log_prob(dists, &heads);
    (heads, lp)
}

/// Scalar state-value network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueNet {
    pub net: Mlp,
}

impl ValueNet {
    pub fn new(state_len: usize, rng: &mut EngineRng) -> Result<Self> {
        let w = POLICY_WIDTH;
        let net = Mlp::glorot(
            &[state_len, w, w, w, 1],
            &[Activation::Tanh, Activation::Tanh, Activation::Tanh, Activation::Identity],
            rng,
        )?;
        Ok(Self { net })
    }

    pub fn forward(&self, s: &[f64]) -> Result<f64> {
        Ok(self.net.forward(s)?[0])
    }

    /// Gradient of the mean of `(target − V(s))²` with targets held fixed.
    pub fn grad_td(&self, batch: &[(&[f64], f64)]) -> Result<(f64, Vec<f64>)> {
        let mut g = vec![0.0; self.net.param_count()];
        let mut loss = 0.0;
        let n = batch.len().max(1) as f64;
        for (s, target) in batch {
            let trace = self.net.forward_trace(s)?;
            let err = target - trace.output()[0];
            loss += err * err / n;
            if err != 0.0 {
                self.net.backward(&trace, &[-2.0 * err / n], &mut g);
            }
        }
        Ok((loss, g))
    }
}

/// Scores `(state, action)` pairs: near 1 for expert-like, near 0 otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorNet {
    pub net: Mlp,
}

impl DiscriminatorNet {
    pub fn new(input_len: usize, rng: &mut EngineRng) -> Result<Self> {
        let w = DISC_WIDTH;
        let net = Mlp::glorot(
            &[input_len, w, w, 1],
            &[Activation::Relu, Activation::Relu, Activation::Identity],
            rng,
        )?;
        Ok(Self { net })
    }

    fn input(s: &[f64], a: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(s.len() + a.len());
        x.extend_from_slice(s);
        x.extend_from_slice(a);
        x
    }

    pub fn forward(&self, s: &[f64], a: &[f64]) -> Result<f64> {
        let z = self.net.forward(&Self::input(s, a))?[0];
        Ok(math::logistic(z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP)))
    }

    /// Loss `−mean_E ln D − mean_G ln(1 − D)` and its gradient.
    pub fn grad_loss(&self, generated: &[(&[f64], &[f64])], expert: &[(&[f64], &[f64])]) -> Result<(f64, Vec<f64>)> {
        if generated.is_empty() || expert.is_empty() {
            return Err(Error::InvalidInput("discriminator batches must be nonempty".into()));
        }
        let mut g = vec![0.0; self.net.param_count()];
        let mut loss = 0.0;
        for (batch, is_expert) in [(expert, true), (generated, false)] {
            let n = batch.len() as f64;
            for (s, a) in batch.iter() {
                let trace = self.net.forward_trace(&Self::input(s, a))?;
                let z = trace.output()[0];
                let zc = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
                let d = math::logistic(zc);
                let dz = if is_expert {
                    loss -= math::ln(d) / n;
                    -(1.0 - d) / n
                } else {
                    loss -= math::ln(1.0 - d) / n;
                    d / n
                };
                if z.abs() < LOGIT_CLAMP {
                    self.net.backward(&trace, &[dz], &mut g);
                }
            }
        }
        Ok((loss, g))
    }
}

/// Adam optimiser state for one parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// One descent step along `grads`.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::ShapeMismatch {
                expected: self.m.len(),
                found: grads.len().min(params.len()),
            });
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - libm::pow(self.beta1, f64::from(t));
        let c2 = 1.0 - libm::pow(self.beta2, f64::from(t));
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] -= self.lr * mhat / (math::sqrt(vhat) + self.eps);
        }
        Ok(())
    }
}
