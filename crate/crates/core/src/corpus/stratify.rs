use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{chronological_key, is_known_key, CorpusError, Session};

/// Categories with fewer test sessions than this are left out of subgroup
/// reports as too noisy.
pub const DEFAULT_MIN_COUNT: usize = 150;

/// Sessions grouped by the categories of one metadata key.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratification<'a> {
    pub key: String,
    /// Retained categories (at least `min_count` sessions each).
    pub groups: BTreeMap<String, Vec<&'a Session>>,
    /// Categories dropped for being too small, with their session counts.
    pub omitted: BTreeMap<String, usize>,
    /// Sessions with no value for the key.
    pub missing: usize,
}

pub fn stratify<'a, I>(
    sessions: I,
    metadata_key: &str,
    min_count: usize,
) -> Result<Stratification<'a>, CorpusError>
where
    I: IntoIterator<Item = &'a Session>,
{
    if !is_known_key(metadata_key) {
        return Err(CorpusError::UnknownMetadataKey(metadata_key.to_string()));
    }
    let mut all: BTreeMap<String, Vec<&'a Session>> = BTreeMap::new();
    let mut missing = 0;
    for s in sessions {
        match s.metadata_value(metadata_key) {
            Some(v) => all.entry(v.to_string()).or_default().push(s),
            None => missing += 1,
        }
    }
    let mut groups = BTreeMap::new();
    let mut omitted = BTreeMap::new();
    for (category, members) in all {
        if members.len() < min_count {
            omitted.insert(category, members.len());
        } else {
            groups.insert(category, members);
        }
    }
    Ok(Stratification {
        key: metadata_key.to_string(),
        groups,
        omitted,
        missing,
    })
}

/// Mean PHQ-8 over each speaker's first session only (earliest
/// `recorded_at`, ties broken by `session_id`).
pub fn mean_phq_first_session<'a, I>(sessions: I) -> Result<f64, CorpusError>
where
    I: IntoIterator<Item = &'a Session>,
{
    let mut first: BTreeMap<&'a str, &'a Session> = BTreeMap::new();
    for s in sessions {
        first
            .entry(s.speaker_id.as_str())
            .and_modify(|cur| {
                if chronological_key(s) < chronological_key(cur) {
                    *cur = s;
                }
            })
            .or_insert(s);
    }
    if first.is_empty() {
        return Err(CorpusError::EmptySessions);
    }
    let total: u64 = first.values().map(|s| s.phq8_total as u64).sum();
    Ok(total as f64 / first.len() as f64)
}
