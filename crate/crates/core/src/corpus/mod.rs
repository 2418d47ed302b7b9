//! Sessions, PHQ-8 labels, speaker-disjoint partitions and corpus statistics.

mod datetime;
mod partition;
mod stats;
mod stratify;
pub mod synth;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use datetime::{
    days_in_month, derive_time_buckets, is_leap_year, CivilDateTime, DayClass, Season,
    TimeBuckets, TimeOfDay, Weekday,
};
pub use partition::{partition_speakers, Partition, Split};
pub use stats::{corpus_stats, StatsCell, StatsTable};
pub use stratify::{mean_phq_first_session, stratify, Stratification, DEFAULT_MIN_COUNT};
pub use synth::{synth_corpus, SynthConfig, SyntheticCorpus};

/// Highest possible PHQ-8 total: eight items scored 0 to 3.
pub const PHQ8_MAX: u8 = 24;
/// PHQ-8 totals at or above this value are labeled depressed.
pub const PHQ8_DEPRESSION_CUTOFF: u8 = 10;

pub const KEY_GENDER: &str = "gender";
pub const KEY_AGE_GROUP: &str = "age_group";
pub const KEY_SMOKING: &str = "smoking";
pub const KEY_STATE: &str = "state";
pub const KEY_ETHNICITY: &str = "ethnicity";
pub const KEY_MARITAL: &str = "marital";
pub const KEY_TIME_OF_DAY: &str = "time_of_day";
pub const KEY_DAY_OF_WEEK: &str = "day_of_week";
pub const KEY_SEASON: &str = "season";

/// Self-reported user metadata keys.
pub const USER_KEYS: [&str; 6] = [
    KEY_GENDER,
    KEY_AGE_GROUP,
    KEY_SMOKING,
    KEY_STATE,
    KEY_ETHNICITY,
    KEY_MARITAL,
];
/// Keys computed from `recorded_at`.
pub const DERIVED_KEYS: [&str; 3] = [KEY_TIME_OF_DAY, KEY_DAY_OF_WEEK, KEY_SEASON];

pub fn is_known_key(key: &str) -> bool {
    USER_KEYS.contains(&key) || DERIVED_KEYS.contains(&key)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("PHQ-8 total {0} outside 0..=24")]
    PhqOutOfRange(i64),
    #[error("session {0}: duration must be positive and finite")]
    InvalidDuration(String),
    #[error("invalid date-time: {0}")]
    InvalidDateTime(String),
    #[error("duplicate session id {0}")]
    DuplicateSession(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("empty session list")]
    EmptySessions,
    #[error("test fraction {0} must lie strictly between 0 and 1")]
    InvalidTestFraction(f64),
    #[error("no single-session speakers available for the test split")]
    NoSingleSessionSpeakers,
    #[error("session {0} is not covered by the partition")]
    UncoveredSession(String),
    #[error("partition names unknown session {0}")]
    UnknownSession(String),
    #[error("speaker {0} has sessions in both train and test")]
    SpeakerLeak(String),
    #[error("speaker {0} has several sessions but some are in test")]
    MultiSessionSpeakerInTest(String),
    #[error("unknown metadata key {0:?}")]
    UnknownMetadataKey(String),
    #[error("session {session}: metadata {key}={found:?} disagrees with recorded_at ({expected})")]
    DerivedMetadataMismatch {
        session: String,
        key: String,
        found: String,
        expected: String,
    },
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
}

/// Binary depression class obtained by thresholding the PHQ-8 total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DepressionLabel {
    DepMinus,
    DepPlus,
}

impl DepressionLabel {
    pub fn is_positive(self) -> bool {
        self == DepressionLabel::DepPlus
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            DepressionLabel::DepPlus
        } else {
            DepressionLabel::DepMinus
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DepressionLabel::DepPlus => "Dep+",
            DepressionLabel::DepMinus => "Dep-",
        }
    }
}

/// PHQ-8 ≥ 10 is `DepPlus`, anything below is `DepMinus`.
pub fn binarize_phq(phq8_total: i64) -> Result<DepressionLabel, CorpusError> {
    if !(0..=PHQ8_MAX as i64).contains(&phq8_total) {
        return Err(CorpusError::PhqOutOfRange(phq8_total));
    }
    Ok(DepressionLabel::from_positive(
        phq8_total >= PHQ8_DEPRESSION_CUTOFF as i64,
    ))
}

/// One recorded interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub speaker_id: String,
    pub phq8_total: u8,
    pub recorded_at: CivilDateTime,
    pub duration_seconds: f64,
    #[serde(default)]
    pub word_count: u64,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript_ref: Option<String>,
}

impl Session {
    pub fn label(&self) -> DepressionLabel {
        DepressionLabel::from_positive(self.phq8_total >= PHQ8_DEPRESSION_CUTOFF)
    }

    pub fn time_buckets(&self) -> TimeBuckets {
        derive_time_buckets(&self.recorded_at)
    }

    fn derived_pairs(&self) -> [(&'static str, &'static str); 3] {
        let b = self.time_buckets();
        [
            (KEY_TIME_OF_DAY, b.time_of_day.as_str()),
            (KEY_DAY_OF_WEEK, b.day_of_week.as_str()),
            (KEY_SEASON, b.season.as_str()),
        ]
    }

    /// Writes the time-derived keys into `metadata`, overwriting stale values.
    pub fn fill_derived_metadata(&mut self) {
        for (k, v) in self.derived_pairs() {
            self.metadata.insert(k.to_string(), v.to_string());
        }
    }

    /// Value of a metadata key. Derived keys are always computed from
    /// `recorded_at`; user keys come from `metadata` and may be absent.
    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        if let Some((_, v)) = self.derived_pairs().into_iter().find(|(k, _)| *k == key) {
            return Some(v);
        }
        self.metadata.get(key).map(String::as_str)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.phq8_total > PHQ8_MAX {
            return Err(CorpusError::PhqOutOfRange(self.phq8_total as i64));
        }
        if !(self.duration_seconds.is_finite() && self.duration_seconds > 0.0) {
            return Err(CorpusError::InvalidDuration(self.session_id.clone()));
        }
        for (k, expected) in self.derived_pairs() {
            if let Some(found) = self.metadata.get(k) {
                if found != expected {
                    return Err(CorpusError::DerivedMetadataMismatch {
                        session: self.session_id.clone(),
                        key: k.to_string(),
                        found: found.clone(),
                        expected: expected.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Sort key that decides a speaker's "first" session: earliest
/// `recorded_at`, ties broken by `session_id`.
pub(crate) fn chronological_key(s: &Session) -> (CivilDateTime, &str) {
    (s.recorded_at, s.session_id.as_str())
}

/// Validated, immutable collection of sessions with a speaker index.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    sessions: Vec<Session>,
    by_id: BTreeMap<String, usize>,
    speaker_index: BTreeMap<String, Vec<String>>,
}

impl Corpus {
    pub fn new(sessions: Vec<Session>) -> Result<Self, CorpusError> {
        let mut by_id = BTreeMap::new();
        for (i, s) in sessions.iter().enumerate() {
            s.validate()?;
            if by_id.insert(s.session_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateSession(s.session_id.clone()));
            }
        }
        let mut grouped: BTreeMap<&str, Vec<&Session>> = BTreeMap::new();
        for s in &sessions {
            grouped.entry(s.speaker_id.as_str()).or_default().push(s);
        }
        let speaker_index = grouped
            .into_iter()
            .map(|(spk, mut list)| {
                list.sort_by(|a, b| chronological_key(a).cmp(&chronological_key(b)));
                (
                    spk.to_string(),
                    list.into_iter().map(|s| s.session_id.clone()).collect(),
                )
            })
            .collect();
        Ok(Corpus {
            sessions,
            by_id,
            speaker_index,
        })
    }

    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn get(&self, session_id: &str) -> Option<&Session> {
        self.by_id.get(session_id).map(|&i| &self.sessions[i])
    }

    /// Speaker id → session ids in chronological order.
    pub fn speaker_index(&self) -> &BTreeMap<String, Vec<String>> {
        &self.speaker_index
    }

    pub fn n_speakers(&self) -> usize {
        self.speaker_index.len()
    }

    pub fn into_sessions(self) -> Vec<Session> {
        self.sessions
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn session(id: &str, speaker: &str, phq: u8, at: &str) -> Session {
        Session {
            session_id: id.to_string(),
            speaker_id: speaker.to_string(),
            phq8_total: phq,
            recorded_at: at.parse().unwrap(),
            duration_seconds: 240.0,
            word_count: 500,
            metadata: BTreeMap::new(),
            audio_ref: None,
            transcript_ref: None,
        }
    }
}
