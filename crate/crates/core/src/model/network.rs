use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::dsp::Segment;
use crate::math;
use crate::rng::SplitMix64;

/// Layer widths. `hidden` lists the width of each encoder group; the
/// predictor group maps the last width (or the input) to one logit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
}

impl ModelSpec {
    pub fn n_groups(&self) -> usize {
        self.hidden.len() + 1
    }

    /// `(fan_in, fan_out)` of group `g`.
    pub fn group_shape(&self, g: usize) -> (usize, usize) {
        let fan_in = if g == 0 { self.input_dim } else { self.hidden[g - 1] };
        let fan_out = if g < self.hidden.len() { self.hidden[g] } else { 1 };
        (fan_in, fan_out)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_dim == 0 || self.hidden.contains(&0) {
            return Err(ModelError::InvalidConfig("layer widths must be positive"));
        }
        Ok(())
    }
}

/// Weights `W` (row-major, `fan_out × fan_in`) followed by biases.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGroup {
    pub params: Vec<f64>,
    pub frozen: bool,
    pub lr_multiplier: f64,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl ParameterGroup {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        ParameterGroup {
            params: vec![0.0; fan_out * (fan_in + 1)],
            frozen: false,
            lr_multiplier: 1.0,
            fan_in,
            fan_out,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.params[..self.fan_in * self.fan_out]
    }

    pub fn biases(&self) -> &[f64] {
        &self.params[self.fan_in * self.fan_out..]
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let (w, b) = self.params.split_at(self.fan_in * self.fan_out);
        for (row, bias) in w.chunks_exact(self.fan_in).zip(b) {
            out.push(bias + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>());
        }
    }
}

/// Fixed affine map `(x - shift) * scale` applied before group 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaler {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl InputScaler {
    pub fn identity(dim: usize) -> Self {
        InputScaler {
            shift: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Standardizes each coordinate over `inputs`. Constant coordinates
    /// keep scale 1.
    pub fn fit<'a, I>(dim: usize, inputs: I) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut n = 0usize;
        let mut mean = vec![0.0; dim];
        let mut m2 = vec![0.0; dim];
        for x in inputs {
            n += 1;
            for d in 0..dim {
                let delta = x[d] - mean[d];
                mean[d] += delta / n as f64;
                m2[d] += delta * (x[d] - mean[d]);
            }
        }
        let scale = m2
            .iter()
            .map(|v| {
                let sd = if n > 1 { math::sqrt(v / (n - 1) as f64) } else { 0.0 };
                if sd > 1e-12 {
                    1.0 / sd
                } else {
                    1.0
                }
            })
            .collect();
        InputScaler { shift: mean, scale }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (s, k))| (v - s) * k)
            .collect()
    }
}

/// Masked summary of one segment: per-bin mean then per-bin standard
/// deviation over the real frames.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledSegment {
    pub input: Vec<f64>,
    pub real_frames: usize,
    pub n_frames: usize,
}

impl PooledSegment {
    /// A single-frame input that is never padded.
    pub fn dense(input: Vec<f64>) -> Self {
        PooledSegment {
            input,
            real_frames: 1,
            n_frames: 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.real_frames == 0
    }

    /// Share of real frames, used as the aggregation weight.
    pub fn weight(&self) -> f64 {
        if self.n_frames == 0 {
            0.0
        } else {
            self.real_frames as f64 / self.n_frames as f64
        }
    }
}

pub fn pool_segment(segment: &Segment) -> PooledSegment {
    let m = segment.n_mels;
    let real = segment.real_frames.min(segment.n_frames);
    let mut input = vec![0.0; 2 * m];
    if real > 0 {
        for t in 0..real {
            for (acc, v) in input[..m].iter_mut().zip(segment.row(t)) {
                *acc += *v as f64;
            }
        }
        for v in &mut input[..m] {
            *v /= real as f64;
        }
        for t in 0..real {
            for (k, v) in segment.row(t).iter().enumerate() {
                let d = *v as f64 - input[k];
                input[m + k] += d * d;
            }
        }
        for v in &mut input[m..] {
            *v = math::sqrt(*v / real as f64);
        }
    }
    PooledSegment {
        input,
        real_frames: real,
        n_frames: segment.n_frames,
    }
}

/// Encoder groups `0..K-1` (affine + tanh) followed by a predictor group
/// producing a logit. Group order never changes after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredModel {
    pub spec: ModelSpec,
    pub scaler: InputScaler,
    pub groups: Vec<ParameterGroup>,
}

/// Activations of one forward pass: `acts[0]` is the scaled input,
/// `acts[g + 1]` the output of encoder group `g`.
pub(crate) struct Trace {
    pub acts: Vec<Vec<f64>>,
    pub logit: f64,
}

impl LayeredModel {
    pub fn zeros(spec: ModelSpec) -> Result<Self, ModelError> {
        spec.validate()?;
        let groups = (0..spec.n_groups())
            .map(|g| {
                let (i, o) = spec.group_shape(g);
                ParameterGroup::zeros(i, o)
            })
            .collect();
        Ok(LayeredModel {
            scaler: InputScaler::identity(spec.input_dim),
            spec,
            groups,
        })
    }

    /// Weights uniform in `(-r, r)` with `r = 1/sqrt(fan_in)`; biases zero.
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self, ModelError> {
        let mut model = Self::zeros(spec)?;
        let root = SplitMix64::new(seed);
        for (g, group) in model.groups.iter_mut().enumerate() {
            let mut rng = root.fork(g as u64);
            let r = 1.0 / math::sqrt(group.fan_in as f64);
            let n_w = group.fan_in * group.fan_out;
            for p in &mut group.params[..n_w] {
                *p = rng.uniform(-r, r);
            }
        }
        Ok(model)
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn n_params(&self) -> usize {
        self.groups.iter().map(|g| g.params.len()).sum()
    }

    pub fn frozen_flags(&self) -> Vec<bool> {
        self.groups.iter().map(|g| g.frozen).collect()
    }

    pub fn set_frozen(&mut self, frozen: &[bool]) {
        for (g, f) in self.groups.iter_mut().zip(frozen) {
            g.frozen = *f;
        }
    }

    pub fn freeze_all(&mut self) {
        self.groups.iter_mut().for_each(|g| g.frozen = true);
    }

    pub fn unfrozen(&self) -> Vec<usize> {
        (0..self.groups.len()).filter(|g| !self.groups[*g].frozen).collect()
    }

    pub fn check_dims(&self) -> Result<(), ModelError> {
        self.spec.validate()?;
        let ok = self.groups.len() == self.spec.n_groups()
            && self.scaler.shift.len() == self.spec.input_dim
            && self.scaler.scale.len() == self.spec.input_dim
            && self.groups.iter().enumerate().all(|(g, grp)| {
                let (i, o) = self.spec.group_shape(g);
                grp.fan_in == i && grp.fan_out == o && grp.params.len() == o * (i + 1)
            });
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidConfig("parameter groups do not match the model spec"))
        }
    }

    /// Scaled input for group 0. An empty segment maps to the zero vector,
    /// so it is scored by the bias path alone.
    pub(crate) fn prepare(&self, pooled: &PooledSegment) -> Result<Vec<f64>, ModelError> {
        if pooled.input.len() != self.spec.input_dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.spec.input_dim,
                got: pooled.input.len(),
            });
        }
        if pooled.is_empty() {
            return Ok(vec![0.0; self.spec.input_dim]);
        }
        Ok(self.scaler.apply(&pooled.input))
    }

    pub(crate) fn trace(&self, x: Vec<f64>) -> Trace {
        let k = self.groups.len();
        let mut acts = Vec::with_capacity(k);
        acts.push(x);
        let mut buf = Vec::new();
        for g in 0..k - 1 {
            self.groups[g].affine(&acts[g], &mut buf);
            acts.push(buf.iter().map(|z| math::tanh(*z)).collect());
        }
        let mut out = Vec::with_capacity(1);
        self.groups[k - 1].affine(&acts[k - 1], &mut out);
        Trace { acts, logit: out[0] }
    }

    /// Output of the encoder groups (input to the predictor).
    pub fn encode(&self, pooled: &PooledSegment) -> Result<Vec<f64>, ModelError> {
        let mut t = self.trace(self.prepare(pooled)?);
        Ok(t.acts.pop().unwrap_or_default())
    }

    pub fn forward_pooled(&self, pooled: &PooledSegment) -> Result<f64, ModelError> {
        Ok(self.trace(self.prepare(pooled)?).logit)
    }

    pub fn predict_pooled(&self, pooled: &PooledSegment) -> Result<f64, ModelError> {
        self.forward_pooled(pooled).map(math::sigmoid)
    }

    /// Backpropagates the BCE loss of one example into `grads`, touching
    /// groups `lowest..` only. Returns the loss.
    pub(crate) fn accumulate(&self, x: Vec<f64>, positive: bool, grads: &mut [Vec<f64>], lowest: usize) -> f64 {
        let k = self.groups.len();
        let t = self.trace(x);
        let y = if positive { 1.0 } else { 0.0 };
        let loss = math::softplus(t.logit) - y * t.logit;
        let mut delta = vec![math::sigmoid(t.logit) - y];
        for g in (lowest..k).rev() {
            let grp = &self.groups[g];
            let a_in = &t.acts[g];
            // delta is dL/d(pre-activation) of this group's outputs
            if g < k - 1 {
                for (d, a) in delta.iter_mut().zip(&t.acts[g + 1]) {
                    *d *= 1.0 - a * a;
                }
            }
            let grad = &mut grads[g];
            let n_w = grp.fan_in * grp.fan_out;
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                for (gw, a) in grad[o * grp.fan_in..(o + 1) * grp.fan_in].iter_mut().zip(a_in) {
                    *gw += d * a;
                }
                grad[n_w + o] += d;
            }
            if g > lowest {
                let w = grp.weights();
                let mut next = vec![0.0; grp.fan_in];
                for (o, d) in delta.iter().enumerate() {
                    for (n, wv) in next.iter_mut().zip(&w[o * grp.fan_in..(o + 1) * grp.fan_in]) {
                        *n += d * wv;
                    }
                }
                delta = next;
            }
        }
        loss
    }
}

/// Masked pooling followed by [`LayeredModel::forward_pooled`].
pub fn forward(model: &LayeredModel, segment: &Segment) -> Result<f64, ModelError> {
    model.forward_pooled(&pool_segment(segment))
}
