use alloc::string::String;
use core::fmt::Write;

use super::{Corpus, CorpusError, DepressionLabel, Partition, Split};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StatsCell {
    pub sessions: u64,
    pub seconds: f64,
    pub words: u64,
}

impl StatsCell {
    pub fn hours(&self) -> f64 {
        self.seconds / 3600.0
    }

    fn add(&mut self, other: &StatsCell) {
        self.sessions += other.sessions;
        self.seconds += other.seconds;
        self.words += other.words;
    }
}

/// Session, hour and word counts by split and depression class.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsTable {
    /// Indexed `[split][label]` with `Train = 0`, `Test = 1`, `DepMinus = 0`, `DepPlus = 1`.
    cells: [[StatsCell; 2]; 2],
    total: StatsCell,
}

fn split_index(split: Split) -> usize {
    match split {
        Split::Train => 0,
        Split::Test => 1,
    }
}

fn label_index(label: DepressionLabel) -> usize {
    match label {
        DepressionLabel::DepMinus => 0,
        DepressionLabel::DepPlus => 1,
    }
}

impl StatsTable {
    pub fn cell(&self, split: Split, label: DepressionLabel) -> &StatsCell {
        &self.cells[split_index(split)][label_index(label)]
    }

    /// Sum of the four cells.
    pub fn total(&self) -> &StatsCell {
        &self.total
    }

    /// Column order: Train Dep-, Train Dep+, Test Dep-, Test Dep+.
    pub fn columns(&self) -> [&StatsCell; 4] {
        [
            &self.cells[0][0],
            &self.cells[0][1],
            &self.cells[1][0],
            &self.cells[1][1],
        ]
    }

    /// Tab-separated table with rows Sessions, Hours, Words.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        out.push_str("\tTotal\tTrain Dep-\tTrain Dep+\tTest Dep-\tTest Dep+\n");
        let cols = self.columns();
        let _ = write!(out, "Sessions\t{}", self.total.sessions);
        for c in cols {
            let _ = write!(out, "\t{}", c.sessions);
        }
        let _ = write!(out, "\nHours\t{:.2}", self.total.hours());
        for c in cols {
            let _ = write!(out, "\t{:.2}", c.hours());
        }
        let _ = write!(out, "\nWords\t{}", self.total.words);
        for c in cols {
            let _ = write!(out, "\t{}", c.words);
        }
        out.push('\n');
        out
    }
}

pub fn corpus_stats(corpus: &Corpus, partition: &Partition) -> Result<StatsTable, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut cells = [[StatsCell::default(); 2]; 2];
    for s in corpus.sessions() {
        let split = partition
            .split_of(&s.session_id)
            .ok_or_else(|| CorpusError::UncoveredSession(s.session_id.clone()))?;
        let cell = &mut cells[split_index(split)][label_index(s.label())];
        cell.sessions += 1;
        cell.seconds += s.duration_seconds;
        cell.words += s.word_count;
    }
    let mut total = StatsCell::default();
    for row in &cells {
        for c in row {
            total.add(c);
        }
    }
    Ok(StatsTable { cells, total })
}
