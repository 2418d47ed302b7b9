//! ROC analysis and DeLong tests for comparing AUCs.
//!
//! Convention throughout: a sample is predicted positive when
//! `score >= threshold`, and tied positive/negative pairs earn half credit.

mod delong;
pub mod naive;
mod roc;

use alloc::string::String;
use alloc::vec::Vec;

pub use delong::{
    auc, delong_test_paired, delong_test_unpaired, delong_variance, midranks,
    paired_by_session, placements, structural_components, unpaired_by_session, AucEstimate,
    DeLongResult, Placements,
};
pub use roc::{eer, roc_curve, sensitivity_specificity_at, EerPoint, RocCurve, RocPoint};

use crate::corpus::DepressionLabel;

/// Significance level used for subgroup flags.
pub const ALPHA: f64 = 0.05;

pub fn is_significant(p: f64) -> bool {
    p < ALPHA
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("need both classes: {n_pos} positives, {n_neg} negatives")]
    SingleClass { n_pos: usize, n_neg: usize },
    #[error("need at least 2 samples per class: {n_pos} positives, {n_neg} negatives")]
    TooFewSamples { n_pos: usize, n_neg: usize },
    #[error("score at index {0} is not finite")]
    NonFiniteScore(usize),
    #[error("paired samples differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("paired samples disagree on the label at index {0}")]
    LabelMismatch(usize),
    #[error("session {0} appears in only one of the paired score sets")]
    SessionMismatch(String),
    #[error("session {0} appears more than once")]
    DuplicateSession(String),
    #[error("session {0} appears in both unpaired sample sets")]
    OverlappingSessions(String),
    #[error("variance of the AUC difference is zero while AUCs differ ({auc_a} vs {auc_b})")]
    Degenerate { auc_a: f64, auc_b: f64 },
    #[error("empty input")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    pub score: f64,
    pub label: DepressionLabel,
}

impl ScoredSample {
    pub fn new(score: f64, positive: bool) -> Self {
        ScoredSample {
            score,
            label: DepressionLabel::from_positive(positive),
        }
    }

    pub fn is_positive(&self) -> bool {
        self.label.is_positive()
    }
}

/// A sample tied to the session it was scored on.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyedSample {
    pub session_id: String,
    pub sample: ScoredSample,
}

/// Validates scores and splits them into (positive, negative) score lists.
pub(crate) fn split_by_class(samples: &[ScoredSample]) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        if !s.score.is_finite() {
            return Err(MetricsError::NonFiniteScore(i));
        }
        if s.is_positive() {
            pos.push(s.score);
        } else {
            neg.push(s.score);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(MetricsError::SingleClass {
            n_pos: pos.len(),
            n_neg: neg.len(),
        });
    }
    Ok((pos, neg))
}

/// Pairwise credit: 1 if the positive outscores the negative, ½ on ties.
#[inline]
pub fn psi(pos: f64, neg: f64) -> f64 {
    if pos > neg {
        1.0
    } else if pos == neg {
        0.5
    } else {
        0.0
    }
}
