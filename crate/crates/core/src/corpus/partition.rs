use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Session};
use crate::math;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// Session id → split.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    assignment: BTreeMap<String, Split>,
}

impl Partition {
    pub fn from_assignment(assignment: BTreeMap<String, Split>) -> Self {
        Partition { assignment }
    }

    pub fn assignment(&self) -> &BTreeMap<String, Split> {
        &self.assignment
    }

    pub fn split_of(&self, session_id: &str) -> Option<Split> {
        self.assignment.get(session_id).copied()
    }

    /// Sessions of `corpus` in `split`, in corpus order.
    pub fn sessions_in<'a>(&self, corpus: &'a Corpus, split: Split) -> Vec<&'a Session> {
        corpus
            .sessions()
            .iter()
            .filter(|s| self.split_of(&s.session_id) == Some(split))
            .collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignment.values().filter(|s| **s == split).count()
    }

    /// Checks coverage and speaker disjointness against `corpus`.
    pub fn validate(&self, corpus: &Corpus) -> Result<(), CorpusError> {
        for s in corpus.sessions() {
            if !self.assignment.contains_key(&s.session_id) {
                return Err(CorpusError::UncoveredSession(s.session_id.clone()));
            }
        }
        for id in self.assignment.keys() {
            if corpus.get(id).is_none() {
                return Err(CorpusError::UnknownSession(id.clone()));
            }
        }
        for (speaker, ids) in corpus.speaker_index() {
            let splits: Vec<Split> = ids.iter().map(|id| self.assignment[id]).collect();
            if splits.iter().any(|s| *s != splits[0]) {
                return Err(CorpusError::SpeakerLeak(speaker.clone()));
            }
            if ids.len() > 1 && splits[0] == Split::Test {
                return Err(CorpusError::MultiSessionSpeakerInTest(speaker.clone()));
            }
        }
        Ok(())
    }
}

/// Speaker-disjoint train/test split.
///
/// Speakers with several sessions always go to train. Single-session
/// speakers are shuffled (speaker ids in sorted order, Fisher–Yates with
/// [`SplitMix64`] seeded by `seed`) and the first
/// `round(test_fraction × n_single)` of them form the test split.
pub fn partition_speakers(
    corpus: &Corpus,
    test_fraction: f64,
    seed: u64,
) -> Result<Partition, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CorpusError::InvalidTestFraction(test_fraction));
    }
    let mut assignment = BTreeMap::new();
    let mut singles: Vec<&str> = Vec::new();
    for (speaker, ids) in corpus.speaker_index() {
        if ids.len() == 1 {
            singles.push(speaker.as_str());
        } else {
            for id in ids {
                assignment.insert(id.clone(), Split::Train);
            }
        }
    }
    if singles.is_empty() {
        return Err(CorpusError::NoSingleSessionSpeakers);
    }
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut singles);
    let n_test = math::round(test_fraction * singles.len() as f64) as usize;
    for (i, speaker) in singles.iter().enumerate() {
        let split = if i < n_test { Split::Test } else { Split::Train };
        let id = &corpus.speaker_index()[*speaker][0];
        assignment.insert(id.clone(), split);
    }
    Ok(Partition { assignment })
}
