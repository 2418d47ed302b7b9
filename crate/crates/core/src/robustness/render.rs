use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{RobustnessError, SkippedCategory, SubsetReport, SubsetRow};

pub const BASE_ROW_LABEL: &str = "Base performance over all test set";

const FIXED_COLUMNS: [&str; 6] = [
    "Metadata",
    "Category",
    "Train Sess. Count",
    "Test Sess. Count",
    "Depression Rate",
    "Mean PHQ",
];
const AUC_SUFFIX: &str = " AUC";
const SKIPPED_TAG: &str = "Skipped";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Markdown,
}

pub(crate) fn permille(rate: f64) -> i64 {
    crate::math::round(rate * 1000.0) as i64
}

fn fmt_rate(rate: f64) -> String {
    let p = permille(rate);
    format!("{}.{}%", p / 10, p % 10)
}

pub(crate) fn fmt_phq(v: f64) -> String {
    format!("{v:.2}")
}

pub(crate) fn fmt_auc(v: f64) -> String {
    format!("{v:.3}")
}

pub(crate) fn reparse(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

fn cells(report: &SubsetReport, row: &SubsetRow, show_key: bool) -> Vec<String> {
    let mut out = Vec::with_capacity(6 + report.models.len());
    out.push(if show_key { row.metadata_key.clone() } else { String::new() });
    out.push(row.category.clone());
    out.push(row.train_count.to_string());
    out.push(row.test_count.to_string());
    out.push(fmt_rate(row.depression_rate));
    out.push(fmt_phq(row.mean_phq_first_session));
    for m in &report.models {
        let mut cell = row.auc_per_model.get(m).map(|v| fmt_auc(*v)).unwrap_or_default();
        if row.significant_per_model.get(m).copied().unwrap_or(false) {
            cell.push('*');
        }
        out.push(cell);
    }
    out
}

fn table(report: &SubsetReport) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|c| c.to_string()).collect();
    header.extend(report.models.iter().map(|m| format!("{m}{AUC_SUFFIX}")));
    let mut rows = vec_with(cells(report, &report.base_row, true));
    let mut prev: Option<&str> = None;
    for row in &report.rows {
        let show = prev != Some(row.metadata_key.as_str());
        rows.push(cells(report, row, show));
        prev = Some(&row.metadata_key);
    }
    (header, rows)
}

fn vec_with(first: Vec<String>) -> Vec<Vec<String>> {
    let mut v = Vec::new();
    v.push(first);
    v
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

/// Renders the table, then any skipped categories after a blank line.
/// Output depends only on the report, so equal reports render identically.
pub fn render_report(report: &SubsetReport, format: ReportFormat) -> String {
    let (header, rows) = table(report);
    let mut out = String::new();
    match format {
        ReportFormat::Tsv => {
            out.push_str(&header.join("\t"));
            out.push('\n');
            for r in &rows {
                out.push_str(&r.join("\t"));
                out.push('\n');
            }
            if !report.skipped.is_empty() {
                out.push('\n');
                for s in &report.skipped {
                    out.push_str(&format!("{SKIPPED_TAG}\t{}\t{}\t{}\n", s.metadata_key, s.category, s.reason));
                }
            }
        }
        ReportFormat::Markdown => {
            let line = |cells: &[String]| {
                let escaped: Vec<String> = cells.iter().map(|c| md_escape(c)).collect();
                format!("| {} |\n", escaped.join(" | "))
            };
            out.push_str(&line(&header));
            let align: Vec<String> = (0..header.len())
                .map(|i| if i < 2 { "---".to_string() } else { "---:".to_string() })
                .collect();
            out.push_str(&format!("|{}|\n", align.join("|")));
            for r in &rows {
                out.push_str(&line(r));
            }
            out.push_str("\n\\* p < 0.05: the category's AUC differs significantly from the rest of its group.\n");
            if !report.skipped.is_empty() {
                out.push_str("\nSkipped categories:\n\n");
                for s in &report.skipped {
                    out.push_str(&format!(
                        "- {} / {}: {}\n",
                        md_escape(&s.metadata_key),
                        md_escape(&s.category),
                        md_escape(&s.reason)
                    ));
                }
            }
        }
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> RobustnessError {
    RobustnessError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_count(s: &str, line: usize) -> Result<usize, RobustnessError> {
    s.parse().map_err(|_| parse_err(line, format!("bad count {s:?}")))
}

fn parse_rate(s: &str, line: usize) -> Result<f64, RobustnessError> {
    let bad = || parse_err(line, format!("bad rate {s:?}"));
    let body = s.strip_suffix('%').ok_or_else(bad)?;
    let (whole, frac) = body.split_once('.').ok_or_else(bad)?;
    if frac.len() != 1 {
        return Err(bad());
    }
    let w: i64 = whole.parse().map_err(|_| bad())?;
    let f: i64 = frac.parse().map_err(|_| bad())?;
    Ok((w * 10 + f) as f64 / 1000.0)
}

fn parse_real(s: &str, line: usize) -> Result<f64, RobustnessError> {
    s.parse().map_err(|_| parse_err(line, format!("bad number {s:?}")))
}

/// Reads a report written by [`render_report`] in TSV form.
pub fn parse_tsv_report(text: &str) -> Result<SubsetReport, RobustnessError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty report"))?;
    let header: Vec<&str> = header.split('\t').collect();
    if header.len() < FIXED_COLUMNS.len() || header[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(parse_err(1, "unexpected header"));
    }
    let models: Vec<String> = header[FIXED_COLUMNS.len()..]
        .iter()
        .map(|c| {
            c.strip_suffix(AUC_SUFFIX)
                .map(|m| m.to_string())
                .ok_or_else(|| parse_err(1, format!("column {c:?} is not an AUC column")))
        })
        .collect::<Result<_, _>>()?;

    let mut base_row: Option<SubsetRow> = None;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut key = String::new();
    let mut in_footer = false;
    for (no, line) in lines {
        if line.is_empty() {
            in_footer = true;
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if in_footer {
            if f.len() != 4 || f[0] != SKIPPED_TAG {
                return Err(parse_err(no, "unexpected footer line"));
            }
            skipped.push(SkippedCategory {
                metadata_key: f[1].to_string(),
                category: f[2].to_string(),
                reason: f[3].to_string(),
            });
            continue;
        }
        if f.len() != header.len() {
            return Err(parse_err(no, format!("expected {} fields, found {}", header.len(), f.len())));
        }
        if !f[0].is_empty() {
            key = f[0].to_string();
        }
        let mut auc_per_model = BTreeMap::new();
        let mut significant_per_model = BTreeMap::new();
        for (m, cell) in models.iter().zip(&f[FIXED_COLUMNS.len()..]) {
            let (v, flagged) = match cell.strip_suffix('*') {
                Some(v) => (v, true),
                None => (*cell, false),
            };
            auc_per_model.insert(m.clone(), parse_real(v, no)?);
            significant_per_model.insert(m.clone(), flagged);
        }
        let row = SubsetRow {
            metadata_key: key.clone(),
            category: f[1].to_string(),
            train_count: parse_count(f[2], no)?,
            test_count: parse_count(f[3], no)?,
            depression_rate: parse_rate(f[4], no)?,
            mean_phq_first_session: parse_real(f[5], no)?,
            auc_per_model,
            significant_per_model,
        };
        if base_row.is_none() {
            if row.metadata_key != BASE_ROW_LABEL {
                return Err(parse_err(no, "first row must be the base row"));
            }
            base_row = Some(row);
        } else {
            rows.push(row);
        }
    }
    Ok(SubsetReport {
        models,
        base_row: base_row.ok_or_else(|| parse_err(2, "missing base row"))?,
        rows,
        skipped,
        p_values: BTreeMap::new(),
    })
}
