use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::network::{LayeredModel, PooledSegment};
use super::ModelError;
use crate::math;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub base_lr: f64,
    /// Learning rate ratio between consecutive groups, deeper groups slower.
    pub lr_ratio: f64,
    pub epochs_per_stage: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            base_lr: 0.05,
            lr_ratio: 2.0,
            epochs_per_stage: 20,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.base_lr.is_finite() && self.base_lr > 0.0) {
            return Err(ModelError::InvalidConfig("base_lr must be positive and finite"));
        }
        if !(self.lr_ratio.is_finite() && self.lr_ratio >= 1.0) {
            return Err(ModelError::InvalidConfig("lr_ratio must be finite and at least 1"));
        }
        if self.epochs_per_stage == 0 {
            return Err(ModelError::InvalidConfig("epochs_per_stage must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(ModelError::InvalidConfig("batch_size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: PooledSegment,
    pub positive: bool,
}

impl Example {
    pub fn new(input: PooledSegment, positive: bool) -> Self {
        Example { input, positive }
    }
}

/// `lr(g) = base_lr / ratio^(n_groups - 1 - g)`.
pub fn discriminative_lrs(base_lr: f64, ratio: f64, n_groups: usize) -> Result<Vec<f64>, ModelError> {
    if !(base_lr.is_finite() && base_lr > 0.0) || !(ratio.is_finite() && ratio >= 1.0) || n_groups == 0 {
        return Err(ModelError::InvalidConfig("need base_lr > 0, ratio >= 1 and at least one group"));
    }
    Ok((0..n_groups)
        .map(|g| base_lr / math::powi(ratio, (n_groups - 1 - g) as i32))
        .collect())
}

/// Unfrozen group sets visited by [`gradual_unfreeze`]: `{K-1}`, `{K-2, K-1}`, …, all.
pub fn unfreeze_schedule(n_groups: usize) -> Vec<Vec<usize>> {
    (1..=n_groups).map(|s| (n_groups - s..n_groups).collect()).collect()
}

fn check_data(model: &LayeredModel, data: &[Example]) -> Result<(), ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptyData);
    }
    let n_pos = data.iter().filter(|e| e.positive).count();
    if n_pos == 0 || n_pos == data.len() {
        return Err(ModelError::SingleClass);
    }
    for e in data {
        if e.input.input.len() != model.input_dim() {
            return Err(ModelError::DimensionMismatch {
                expected: model.input_dim(),
                got: e.input.input.len(),
            });
        }
    }
    Ok(())
}

/// Mean BCE over `data`.
pub fn mean_loss(model: &LayeredModel, data: &[Example]) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for e in data {
        let logit = model.forward_pooled(&e.input)?;
        let y = if e.positive { 1.0 } else { 0.0 };
        total += math::softplus(logit) - y * logit;
    }
    Ok(total / data.len() as f64)
}

/// Gradient of the mean loss over `batch` for groups `lowest..`.
pub(crate) fn batch_gradient(
    model: &LayeredModel,
    batch: &[&Example],
    lowest: usize,
) -> Result<(Vec<Vec<f64>>, f64), ModelError> {
    let mut grads: Vec<Vec<f64>> = model.groups.iter().map(|g| vec![0.0; g.params.len()]).collect();
    let mut loss = 0.0;
    for e in batch {
        let x = model.prepare(&e.input)?;
        loss += model.accumulate(x, e.positive, &mut grads, lowest);
    }
    let scale = 1.0 / batch.len() as f64;
    for g in &mut grads {
        g.iter_mut().for_each(|v| *v *= scale);
    }
    Ok((grads, loss * scale))
}

/// Minibatch SGD on the unfrozen groups. Each group steps with
/// `base_lr * lr_multiplier`. Frozen groups are never written.
///
/// On success the model is updated and the per-epoch mean training loss
/// (evaluated after each epoch) is returned. On error the model is left
/// untouched.
pub fn train_stage(model: &mut LayeredModel, data: &[Example], cfg: &TrainConfig) -> Result<Vec<f64>, ModelError> {
    train_stage_with_stream(model, data, cfg, 0)
}

fn train_stage_with_stream(
    model: &mut LayeredModel,
    data: &[Example],
    cfg: &TrainConfig,
    stream: u64,
) -> Result<Vec<f64>, ModelError> {
    cfg.validate()?;
    model.check_dims()?;
    let trainable = model.unfrozen();
    let Some(&lowest) = trainable.first() else {
        return Err(ModelError::NoTrainableGroup);
    };
    check_data(model, data)?;
    let mut work = model.clone();
    let mut rng = SplitMix64::new(cfg.seed).fork(stream);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs_per_stage);
    for epoch in 0..cfg.epochs_per_stage {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|i| &data[*i]).collect();
            let (grads, _) = batch_gradient(&work, &batch, lowest)?;
            for &g in &trainable {
                let group = &mut work.groups[g];
                let step = cfg.base_lr * group.lr_multiplier;
                for (p, d) in group.params.iter_mut().zip(&grads[g]) {
                    *p -= step * d;
                }
            }
        }
        let loss = mean_loss(&work, data)?;
        if !loss.is_finite() {
            return Err(ModelError::Diverged { epoch, loss });
        }
        trace.push(loss);
    }
    *model = work;
    Ok(trace)
}

/// Record of a [`gradual_unfreeze`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfreezeReport {
    /// Unfrozen groups during each stage, as observed on the model.
    pub stages: Vec<Vec<usize>>,
    pub losses: Vec<Vec<f64>>,
}

/// Trains the predictor alone, then unfreezes one deeper group per stage
/// until every group trains. Per-group multipliers are reset to
/// `discriminative_lrs(1, lr_ratio, K)`.
pub fn gradual_unfreeze(model: &mut LayeredModel, data: &[Example], cfg: &TrainConfig) -> Result<UnfreezeReport, ModelError> {
    cfg.validate()?;
    model.check_dims()?;
    check_data(model, data)?;
    let k = model.n_groups();
    let mut work = model.clone();
    for (group, m) in work.groups.iter_mut().zip(discriminative_lrs(1.0, cfg.lr_ratio, k)?) {
        group.lr_multiplier = m;
    }
    let mut report = UnfreezeReport {
        stages: Vec::with_capacity(k),
        losses: Vec::with_capacity(k),
    };
    for (s, unfrozen) in unfreeze_schedule(k).into_iter().enumerate() {
        for (g, group) in work.groups.iter_mut().enumerate() {
            group.frozen = !unfrozen.contains(&g);
        }
        report.stages.push(work.unfrozen());
        report.losses.push(train_stage_with_stream(&mut work, data, cfg, s as u64)?);
    }
    *model = work;
    Ok(report)
}

/// Max relative error between the analytic gradient of the mean loss and
/// central differences `(L(θ+ε) - L(θ-ε)) / 2ε`, over at most
/// `max_per_group` evenly spaced coordinates of every group. The relative
/// error is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn grad_check(model: &LayeredModel, batch: &[Example], eps: f64, max_per_group: usize) -> Result<f64, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyData);
    }
    let refs: Vec<&Example> = batch.iter().collect();
    let (grads, _) = batch_gradient(model, &refs, 0)?;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for g in 0..model.n_groups() {
        let n = model.groups[g].params.len();
        let stride = n.div_ceil(max_per_group.max(1)).max(1);
        for i in (0..n).step_by(stride) {
            let orig = probe.groups[g].params[i];
            probe.groups[g].params[i] = orig + eps;
            let up = mean_loss(&probe, batch)?;
            probe.groups[g].params[i] = orig - eps;
            let down = mean_loss(&probe, batch)?;
            probe.groups[g].params[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grads[g][i];
            let denom = math::abs(analytic).max(math::abs(numeric)).max(1e-6);
            worst = worst.max(math::abs(analytic - numeric) / denom);
        }
    }
    Ok(worst)
}

/// Analytic gradient of the mean loss for every group, frozen or not.
pub fn gradient(model: &LayeredModel, batch: &[Example]) -> Result<Vec<Vec<f64>>, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyData);
    }
    let refs: Vec<&Example> = batch.iter().collect();
    Ok(batch_gradient(model, &refs, 0)?.0)
}
