use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::network::{InputScaler, LayeredModel, ModelSpec, PooledSegment};
use super::train::{train_stage, Example, TrainConfig};
use super::ModelError;
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionScore {
    pub session_id: String,
    pub score: f64,
}

/// Segment-to-session combiner.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Aggregator {
    /// Mean of segment scores weighted by their share of real frames.
    #[default]
    Mean,
    /// One affine layer plus sigmoid over `[mean, max, min, count]`.
    Learned(LayeredModel),
}

fn check_scores(scores: &[f64], weights: &[f64]) -> Result<(), ModelError> {
    if scores.is_empty() {
        return Err(ModelError::EmptyScores);
    }
    if scores.len() != weights.len() {
        return Err(ModelError::DimensionMismatch {
            expected: scores.len(),
            got: weights.len(),
        });
    }
    if scores.iter().any(|s| !(s.is_finite() && (0.0..=1.0).contains(s))) {
        return Err(ModelError::InvalidScore);
    }
    Ok(())
}

/// Weighted mean of segment scores. Weights are the fraction of real
/// frames per segment; if every weight is zero the plain mean is used.
pub fn aggregate_session(scores: &[f64], weights: &[f64]) -> Result<f64, ModelError> {
    check_scores(scores, weights)?;
    let total: f64 = weights.iter().sum();
    let mean = if total > 0.0 {
        scores.iter().zip(weights).map(|(s, w)| s * w).sum::<f64>() / total
    } else {
        math::mean(scores)
    };
    // keep rounding from leaving the input range
    let (lo, hi) = min_max(scores);
    Ok(mean.clamp(lo, hi))
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
}

/// `[weighted mean, max, min, count]` of one session's segment scores.
pub fn session_summary(scores: &[f64], weights: &[f64]) -> Result<Vec<f64>, ModelError> {
    let mean = aggregate_session(scores, weights)?;
    let (lo, hi) = min_max(scores);
    Ok(vec![mean, hi, lo, scores.len() as f64])
}

impl Aggregator {
    pub fn aggregate(&self, scores: &[f64], weights: &[f64]) -> Result<f64, ModelError> {
        match self {
            Aggregator::Mean => aggregate_session(scores, weights),
            Aggregator::Learned(model) => {
                let x = session_summary(scores, weights)?;
                model.predict_pooled(&PooledSegment::dense(x))
            }
        }
    }

    /// Fits the learned aggregator on per-session segment scores.
    /// `sessions` holds `(scores, weights, positive)`.
    pub fn fit_learned(sessions: &[(Vec<f64>, Vec<f64>, bool)], cfg: &TrainConfig) -> Result<Self, ModelError> {
        let mut data = Vec::with_capacity(sessions.len());
        for (s, w, pos) in sessions {
            data.push(Example::new(PooledSegment::dense(session_summary(s, w)?), *pos));
        }
        let mut model = LayeredModel::zeros(ModelSpec {
            input_dim: 4,
            hidden: Vec::new(),
        })?;
        model.scaler = InputScaler::fit(4, data.iter().map(|e| e.input.input.as_slice()));
        train_stage(&mut model, &data, cfg)?;
        Ok(Aggregator::Learned(model))
    }
}

/// Source of pooled segments per session.
pub trait SegmentStore {
    fn pooled_segments(&self, session_id: &str) -> Option<Vec<PooledSegment>>;
}

impl SegmentStore for alloc::collections::BTreeMap<String, Vec<PooledSegment>> {
    fn pooled_segments(&self, session_id: &str) -> Option<Vec<PooledSegment>> {
        self.get(session_id).cloned()
    }
}

/// Segment scores and weights of one session.
pub fn segment_scores(model: &LayeredModel, segments: &[PooledSegment]) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let mut scores = Vec::with_capacity(segments.len());
    let mut weights = Vec::with_capacity(segments.len());
    for seg in segments {
        scores.push(model.predict_pooled(seg)?);
        weights.push(seg.weight());
    }
    Ok((scores, weights))
}

/// Scores each session independently. Failures (missing features, shape
/// errors) are returned in place and do not stop the run.
pub fn score_sessions<S: SegmentStore + ?Sized>(
    model: &LayeredModel,
    aggregator: &Aggregator,
    session_ids: &[&str],
    store: &S,
) -> Vec<Result<SessionScore, ModelError>> {
    session_ids
        .iter()
        .map(|id| {
            let segments = store
                .pooled_segments(id)
                .ok_or_else(|| ModelError::MissingFeatures((*id).into()))?;
            let (scores, weights) = segment_scores(model, &segments)?;
            Ok(SessionScore {
                session_id: (*id).into(),
                score: aggregator.aggregate(&scores, &weights)?,
            })
        })
        .collect()
}
