//! Layered session scorer with staged transfer-learning controls.
//!
//! A segment is pooled into per-bin mean and standard deviation over its
//! real frames, passed through encoder groups (affine + tanh) and a
//! predictor group that emits a logit. Parameters are organised in
//! [`ParameterGroup`]s, index 0 being the deepest; each can be frozen and
//! carries its own learning rate multiplier. Segment scores are combined
//! into one score per session by an [`Aggregator`].

mod aggregate;
mod network;
mod pretrain;
mod text;
mod train;

use alloc::string::String;

pub use aggregate::{
    aggregate_session, score_sessions, segment_scores, session_summary, Aggregator, SegmentStore,
    SessionScore,
};
pub use network::{forward, pool_segment, InputScaler, LayeredModel, ModelSpec, ParameterGroup, PooledSegment};
pub use pretrain::{pretrain_encoder, reconstruction_loss, Decoder, PretrainReport};
pub use text::{text_features, text_features_batch};
pub use train::{
    discriminative_lrs, grad_check, gradient, gradual_unfreeze, mean_loss, train_stage,
    unfreeze_schedule, Example, TrainConfig, UnfreezeReport,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("input has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("every parameter group is frozen")]
    NoTrainableGroup,
    #[error("training data holds a single class")]
    SingleClass,
    #[error("no training data")]
    EmptyData,
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("no segment scores to aggregate")]
    EmptyScores,
    #[error("segment score outside [0, 1]")]
    InvalidScore,
    #[error("no features for session {0}")]
    MissingFeatures(String),
}
