//! Auxiliary reconstruction pre-training for the encoder groups.
//!
//! A linear decoder is attached on top of the encoder output and trained
//! jointly with the encoder to reconstruct the scaled input under squared
//! error. The decoder is then dropped and the encoder groups are frozen,
//! leaving the model ready for predictor-only training.

use alloc::vec;
use alloc::vec::Vec;

use super::network::{LayeredModel, PooledSegment};
use super::train::TrainConfig;
use super::ModelError;
use crate::rng::SplitMix64;
use crate::math;

/// Linear map from the encoder output back to the scaled input.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoder {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl Decoder {
    fn new(fan_in: usize, fan_out: usize, rng: &mut SplitMix64) -> Self {
        let r = 1.0 / math::sqrt(fan_in as f64);
        Decoder {
            weights: (0..fan_in * fan_out).map(|_| rng.uniform(-r, r)).collect(),
            biases: vec![0.0; fan_out],
            fan_in,
            fan_out,
        }
    }

    fn apply(&self, h: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.fan_in)
            .zip(&self.biases)
            .map(|(row, b)| b + row.iter().zip(h).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }
}

/// Reconstruction loss per example: mean squared error over input coordinates, halved.
fn example_loss(model: &LayeredModel, decoder: &Decoder, x: &[f64]) -> f64 {
    let t = model.trace(x.to_vec());
    let top = &t.acts[model.n_groups() - 1];
    let y = decoder.apply(top);
    y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * x.len() as f64)
}

pub fn reconstruction_loss(model: &LayeredModel, decoder: &Decoder, inputs: &[PooledSegment]) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for p in inputs {
        total += example_loss(model, decoder, &model.prepare(p)?);
    }
    Ok(total / inputs.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainReport {
    pub losses: Vec<f64>,
    /// The decoder as it was when detached.
    pub decoder: Decoder,
}

/// Trains encoder groups `0..K-1` plus a temporary decoder on
/// reconstruction, then freezes the encoder. The predictor group is not
/// touched. Needs at least one encoder group.
pub fn pretrain_encoder(
    model: &mut LayeredModel,
    inputs: &[PooledSegment],
    cfg: &TrainConfig,
) -> Result<PretrainReport, ModelError> {
    cfg.validate()?;
    model.check_dims()?;
    let k = model.n_groups();
    if k < 2 {
        return Err(ModelError::InvalidConfig("pre-training needs at least one encoder group"));
    }
    if inputs.is_empty() {
        return Err(ModelError::EmptyData);
    }
    let xs: Vec<Vec<f64>> = inputs.iter().map(|p| model.prepare(p)).collect::<Result<_, _>>()?;
    let mut work = model.clone();
    let root = SplitMix64::new(cfg.seed).fork(u64::MAX);
    let mut rng = root.fork(0);
    let top_dim = work.spec.hidden[k - 2];
    let mut decoder = Decoder::new(top_dim, work.input_dim(), &mut root.fork(1));
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut losses = Vec::with_capacity(cfg.epochs_per_stage);
    for epoch in 0..cfg.epochs_per_stage {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            let mut g_enc: Vec<Vec<f64>> = work.groups[..k - 1].iter().map(|g| vec![0.0; g.params.len()]).collect();
            let mut g_w = vec![0.0; decoder.weights.len()];
            let mut g_b = vec![0.0; decoder.biases.len()];
            let scale = 1.0 / (chunk.len() as f64 * xs[0].len() as f64);
            for &i in chunk {
                let x = &xs[i];
                let t = work.trace(x.clone());
                let top = &t.acts[k - 1];
                let r: Vec<f64> = decoder.apply(top).iter().zip(x).map(|(y, v)| (y - v) * scale).collect();
                let mut delta = vec![0.0; top_dim];
                for (o, ro) in r.iter().enumerate() {
                    let row = &decoder.weights[o * top_dim..(o + 1) * top_dim];
                    for j in 0..top_dim {
                        g_w[o * top_dim + j] += ro * top[j];
                        delta[j] += ro * row[j];
                    }
                    g_b[o] += ro;
                }
                for g in (0..k - 1).rev() {
                    let grp = &work.groups[g];
                    for (d, a) in delta.iter_mut().zip(&t.acts[g + 1]) {
                        *d *= 1.0 - a * a;
                    }
                    let n_w = grp.fan_in * grp.fan_out;
                    for (o, d) in delta.iter().enumerate() {
                        for (gw, a) in g_enc[g][o * grp.fan_in..(o + 1) * grp.fan_in].iter_mut().zip(&t.acts[g]) {
                            *gw += d * a;
                        }
                        g_enc[g][n_w + o] += d;
                    }
                    if g > 0 {
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
            }
            for (g, grads) in g_enc.iter().enumerate() {
                let group = &mut work.groups[g];
                let step = cfg.base_lr * group.lr_multiplier;
                for (p, d) in group.params.iter_mut().zip(grads) {
                    *p -= step * d;
                }
            }
            for (p, d) in decoder.weights.iter_mut().zip(&g_w) {
                *p -= cfg.base_lr * d;
            }
            for (p, d) in decoder.biases.iter_mut().zip(&g_b) {
                *p -= cfg.base_lr * d;
            }
        }
        let loss = xs.iter().map(|x| example_loss(&work, &decoder, x)).sum::<f64>() / xs.len() as f64;
        if !loss.is_finite() {
            return Err(ModelError::Diverged { epoch, loss });
        }
        losses.push(loss);
    }
    for g in 0..k - 1 {
        work.groups[g].frozen = true;
    }
    *model = work;
    Ok(PretrainReport { losses, decoder })
}

#[cfg(test)]
mod tests {
    use super::super::network::ModelSpec;
    use super::*;

    fn low_rank_inputs(n: usize, seed: u64) -> Vec<PooledSegment> {
        // 6-dimensional points on a 2-dimensional subspace
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|_| {
                let (a, b) = (rng.normal() * 0.5, rng.normal() * 0.5);
                PooledSegment::dense(vec![a, b, a + b, a - b, 0.5 * a, -b])
            })
            .collect()
    }

    #[test]
    fn reconstruction_improves_and_encoder_ends_frozen() {
        let inputs = low_rank_inputs(200, 1);
        let mut m = LayeredModel::new(
            ModelSpec {
                input_dim: 6,
                hidden: vec![4],
            },
            2,
        )
        .unwrap();
        let head = m.groups[1].clone();
        let cfg = TrainConfig {
            base_lr: 0.2,
            epochs_per_stage: 60,
            batch_size: 16,
            ..TrainConfig::default()
        };
        let report = pretrain_encoder(&mut m, &inputs, &cfg).unwrap();
        assert!(report.losses.last().unwrap() < &(report.losses[0] * 0.5));
        assert_eq!(m.frozen_flags(), vec![true, false]);
        assert_eq!(m.groups[1], head);
        let again = reconstruction_loss(&m, &report.decoder, &inputs).unwrap();
        assert!((again - report.losses.last().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn needs_an_encoder() {
        let mut m = LayeredModel::zeros(ModelSpec {
            input_dim: 6,
            hidden: vec![],
        })
        .unwrap();
        assert!(pretrain_encoder(&mut m, &low_rank_inputs(4, 1), &TrainConfig::default()).is_err());
    }
}
