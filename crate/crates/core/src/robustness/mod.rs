//! Subgroup robustness reports.
//!
//! Test sessions are stratified by metadata keys, each retained category
//! gets its own AUC per model, and a category is flagged when its AUC
//! differs from the rest of its group at `p < 0.05` under an unpaired
//! DeLong test.

mod overlay;
mod render;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::{mean_phq_first_session, stratify, Corpus, CorpusError, Partition, Session, Split};
use crate::metrics::{self, auc, delong_test_unpaired, MetricsError, ScoredSample};

pub use overlay::{roc_overlay_export, OverlayBundle, OverlayFile, ReferencePoint};
pub use render::{parse_tsv_report, render_report, ReportFormat, BASE_ROW_LABEL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RobustnessError {
    #[error("model {model} has no score for {} test session(s): {}", missing.len(), missing.join(", "))]
    MissingScores { model: String, missing: Vec<String> },
    #[error("model {model}: score for session {session_id} is not finite")]
    NonFiniteScore { model: String, session_id: String },
    #[error("model {0} listed twice")]
    DuplicateModel(String),
    #[error("no test sessions")]
    EmptyTestSet,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("base row: {0}")]
    Metrics(#[from] MetricsError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// How a category is compared with the rest of its group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ComparisonMode {
    /// Category versus the union of the other categories.
    #[default]
    OneVsRest,
    /// Category versus each other category separately; flagged when any
    /// comparison is significant, reporting the smallest p.
    AllPairs,
}

/// Scores of one model keyed by session id.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelScores {
    pub name: String,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRow {
    pub metadata_key: String,
    pub category: String,
    pub train_count: usize,
    pub test_count: usize,
    pub depression_rate: f64,
    pub mean_phq_first_session: f64,
    pub auc_per_model: BTreeMap<String, f64>,
    pub significant_per_model: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedCategory {
    pub metadata_key: String,
    pub category: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetReport {
    /// Model names in column order.
    pub models: Vec<String>,
    pub base_row: SubsetRow,
    /// Rows in key input order, then by descending test count.
    pub rows: Vec<SubsetRow>,
    /// Categories left out for failing test preconditions.
    pub skipped: Vec<SkippedCategory>,
    /// p-values behind the flags, keyed by `(metadata_key, category, model)`.
    pub p_values: BTreeMap<(String, String, String), f64>,
}

impl SubsetReport {
    /// The report as it reads back from its rendered form: numbers rounded
    /// to the printed precision and p-values dropped.
    pub fn at_display_precision(&self) -> SubsetReport {
        let round_row = |r: &SubsetRow| SubsetRow {
            depression_rate: render::permille(r.depression_rate) as f64 / 1000.0,
            mean_phq_first_session: render::reparse(&render::fmt_phq(r.mean_phq_first_session)),
            auc_per_model: r
                .auc_per_model
                .iter()
                .map(|(k, v)| (k.clone(), render::reparse(&render::fmt_auc(*v))))
                .collect(),
            ..r.clone()
        };
        SubsetReport {
            models: self.models.clone(),
            base_row: round_row(&self.base_row),
            rows: self.rows.iter().map(round_row).collect(),
            skipped: self.skipped.clone(),
            p_values: BTreeMap::new(),
        }
    }

    pub fn p_value(&self, key: &str, category: &str, model: &str) -> Option<f64> {
        self.p_values
            .get(&(key.to_string(), category.to_string(), model.to_string()))
            .copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignificanceMark {
    pub flagged: bool,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignificanceOutcome {
    pub marks: BTreeMap<String, SignificanceMark>,
    /// Categories left out of testing and why.
    pub skipped: Vec<(String, MetricsError)>,
}

/// Flags each category whose AUC differs from the others in its group.
///
/// Categories that fail the test preconditions (a class absent or fewer
/// than two samples in a class) are skipped and take no part in the
/// comparisons of the remaining categories.
pub fn significance_mark(group: &BTreeMap<String, Vec<ScoredSample>>, mode: ComparisonMode) -> SignificanceOutcome {
    let mut out = SignificanceOutcome::default();
    let mut usable: Vec<(&String, &Vec<ScoredSample>)> = Vec::new();
    for (cat, samples) in group {
        match metrics::delong_variance(samples) {
            Ok(_) => usable.push((cat, samples)),
            Err(e) => out.skipped.push((cat.clone(), e)),
        }
    }
    if usable.len() < 2 {
        return out;
    }
    for (i, (cat, samples)) in usable.iter().enumerate() {
        let p = match mode {
            ComparisonMode::OneVsRest => {
                let rest: Vec<ScoredSample> = usable
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .flat_map(|(_, (_, s))| s.iter().copied())
                    .collect();
                delong_test_unpaired(samples, &rest).map(|r| r.p_two_sided)
            }
            ComparisonMode::AllPairs => usable
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, (_, other))| delong_test_unpaired(samples, other).map(|r| r.p_two_sided))
                .try_fold(1.0f64, |acc, p| p.map(|p| acc.min(p))),
        };
        match p {
            Ok(p) => {
                out.marks.insert(
                    (*cat).clone(),
                    SignificanceMark {
                        flagged: metrics::is_significant(p),
                        p,
                    },
                );
            }
            Err(e) => out.skipped.push(((*cat).clone(), e)),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub min_count: usize,
    pub mode: ComparisonMode,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            min_count: crate::corpus::DEFAULT_MIN_COUNT,
            mode: ComparisonMode::OneVsRest,
        }
    }
}

fn samples_for(model: &ModelScores, sessions: &[&Session]) -> Vec<ScoredSample> {
    sessions
        .iter()
        .map(|s| ScoredSample {
            score: model.scores[&s.session_id],
            label: s.label(),
        })
        .collect()
}

fn describe_row(key: &str, category: &str, train_count: usize, test: &[&Session]) -> Result<SubsetRow, CorpusError> {
    let positives = test.iter().filter(|s| s.label().is_positive()).count();
    Ok(SubsetRow {
        metadata_key: key.to_string(),
        category: category.to_string(),
        train_count,
        test_count: test.len(),
        depression_rate: positives as f64 / test.len() as f64,
        mean_phq_first_session: mean_phq_first_session(test.iter().copied())?,
        auc_per_model: BTreeMap::new(),
        significant_per_model: BTreeMap::new(),
    })
}

/// Builds the base row over all test sessions and one row per retained
/// category of each key. Categories need `min_count` test sessions.
pub fn subset_auc_report(
    models: &[ModelScores],
    corpus: &Corpus,
    partition: &Partition,
    metadata_keys: &[&str],
    options: &ReportOptions,
) -> Result<SubsetReport, RobustnessError> {
    partition.validate(corpus)?;
    for (i, m) in models.iter().enumerate() {
        if models[..i].iter().any(|o| o.name == m.name) {
            return Err(RobustnessError::DuplicateModel(m.name.clone()));
        }
    }
    let train = partition.sessions_in(corpus, Split::Train);
    let test = partition.sessions_in(corpus, Split::Test);
    if test.is_empty() {
        return Err(RobustnessError::EmptyTestSet);
    }
    for m in models {
        let missing: Vec<String> = test
            .iter()
            .filter(|s| !m.scores.contains_key(&s.session_id))
            .map(|s| s.session_id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(RobustnessError::MissingScores {
                model: m.name.clone(),
                missing,
            });
        }
        if let Some(s) = test.iter().find(|s| !m.scores[&s.session_id].is_finite()) {
            return Err(RobustnessError::NonFiniteScore {
                model: m.name.clone(),
                session_id: s.session_id.clone(),
            });
        }
    }

    let mut base_row = describe_row("", "", train.len(), &test)?;
    base_row.metadata_key = BASE_ROW_LABEL.to_string();
    for m in models {
        base_row.auc_per_model.insert(m.name.clone(), auc(&samples_for(m, &test))?.auc);
        base_row.significant_per_model.insert(m.name.clone(), false);
    }

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut p_values = BTreeMap::new();
    for key in metadata_keys {
        let strat = stratify(test.iter().copied(), key, options.min_count)?;
        let mut train_counts: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &train {
            if let Some(v) = s.metadata_value(key) {
                *train_counts.entry(v).or_default() += 1;
            }
        }
        let mut key_rows: Vec<SubsetRow> = Vec::new();
        for (category, members) in &strat.groups {
            let n_pos = members.iter().filter(|s| s.label().is_positive()).count();
            if n_pos == 0 || n_pos == members.len() {
                skipped.push(SkippedCategory {
                    metadata_key: key.to_string(),
                    category: category.clone(),
                    reason: "single class in test data".to_string(),
                });
                continue;
            }
            let train_count = train_counts.get(category.as_str()).copied().unwrap_or(0);
            let mut row = describe_row(key, category, train_count, members)?;
            for m in models {
                row.auc_per_model
                    .insert(m.name.clone(), auc(&samples_for(m, members))?.auc);
                row.significant_per_model.insert(m.name.clone(), false);
            }
            key_rows.push(row);
        }
        for m in models {
            let group: BTreeMap<String, Vec<ScoredSample>> = key_rows
                .iter()
                .map(|r| (r.category.clone(), samples_for(m, &strat.groups[&r.category])))
                .collect();
            let outcome = significance_mark(&group, options.mode);
            for row in &mut key_rows {
                if let Some(mark) = outcome.marks.get(&row.category) {
                    row.significant_per_model.insert(m.name.clone(), mark.flagged);
                    p_values.insert((key.to_string(), row.category.clone(), m.name.clone()), mark.p);
                }
            }
            for (category, err) in outcome.skipped {
                let reason = alloc::format!("not tested for {}: {}", m.name, err);
                skipped.push(SkippedCategory {
                    metadata_key: key.to_string(),
                    category,
                    reason,
                });
            }
        }
        key_rows.sort_by(|a, b| b.test_count.cmp(&a.test_count).then_with(|| a.category.cmp(&b.category)));
        rows.extend(key_rows);
    }
    Ok(SubsetReport {
        models: models.iter().map(|m| m.name.clone()).collect(),
        base_row,
        rows,
        skipped,
        p_values,
    })
}

#[cfg(test)]
mod tests;
