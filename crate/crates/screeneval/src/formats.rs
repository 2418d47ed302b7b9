//! Text formats: sessions JSONL, partition/scores/latent CSV, model lists.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use screeneval_core::corpus::{Partition, Session, Split};
use screeneval_core::model::SessionScore;
use screeneval_core::robustness::ReferencePoint;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

impl FormatError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|e| FormatError::io(path, e))
}

/// One JSON object per line; blank lines are ignored.
pub fn read_sessions(path: &Path) -> Result<Vec<Session>, FormatError> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let s: Session = serde_json::from_str(line).map_err(|e| FormatError::parse(path, i + 1, e.to_string()))?;
        out.push(s);
    }
    Ok(out)
}

pub fn sessions_to_jsonl(sessions: &[Session]) -> String {
    let mut out = String::new();
    for s in sessions {
        out.push_str(&serde_json::to_string(s).expect("sessions serialize"));
        out.push('\n');
    }
    out
}

/// Splits a CSV body after checking its header. Fields may not contain commas.
fn csv_rows<'a>(path: &Path, text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>, FormatError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == header => {}
        Some((_, h)) => return Err(FormatError::parse(path, 1, format!("expected header {header:?}, found {h:?}"))),
        None => return Err(FormatError::parse(path, 1, "empty file")),
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(FormatError::parse(path, i + 1, format!("expected {width} fields, found {}", fields.len())));
        }
        rows.push((i + 1, fields));
    }
    Ok(rows)
}

pub const PARTITION_HEADER: &str = "session_id,split";
pub const SCORES_HEADER: &str = "session_id,score";
pub const LATENT_HEADER: &str = "session_id,latent";

pub fn read_partition(path: &Path) -> Result<Partition, FormatError> {
    let text = read_text(path)?;
    let mut assignment = BTreeMap::new();
    for (line, f) in csv_rows(path, &text, PARTITION_HEADER)? {
        let split = Split::parse(f[1]).ok_or_else(|| FormatError::parse(path, line, format!("unknown split {:?}", f[1])))?;
        if assignment.insert(f[0].to_string(), split).is_some() {
            return Err(FormatError::parse(path, line, format!("session {} listed twice", f[0])));
        }
    }
    Ok(Partition::from_assignment(assignment))
}

pub fn partition_to_csv(partition: &Partition) -> String {
    let mut out = format!("{PARTITION_HEADER}\n");
    for (id, split) in partition.assignment() {
        let _ = writeln!(out, "{id},{}", split.as_str());
    }
    out
}

/// Decimal with 17 significant digits, enough to read back the same `f64`.
pub fn fmt_sig17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.16}");
    }
    let sci = format!("{:.16e}", x);
    let exp: i32 = sci[sci.find('e').map_or(0, |i| i + 1)..].parse().unwrap_or(0);
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn read_scores(path: &Path) -> Result<BTreeMap<String, f64>, FormatError> {
    let text = read_text(path)?;
    let mut scores = BTreeMap::new();
    for (line, f) in csv_rows(path, &text, SCORES_HEADER)? {
        let v: f64 = f[1]
            .parse()
            .map_err(|_| FormatError::parse(path, line, format!("bad score {:?}", f[1])))?;
        if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
            return Err(FormatError::parse(path, line, format!("score {v} outside [0, 1]")));
        }
        if scores.insert(f[0].to_string(), v).is_some() {
            return Err(FormatError::parse(path, line, format!("session {} listed twice", f[0])));
        }
    }
    Ok(scores)
}

pub fn scores_to_csv(scores: &[SessionScore]) -> String {
    let mut out = format!("{SCORES_HEADER}\n");
    for s in scores {
        let _ = writeln!(out, "{},{}", s.session_id, fmt_sig17(s.score));
    }
    out
}

pub fn read_latent(path: &Path) -> Result<BTreeMap<String, f64>, FormatError> {
    let text = read_text(path)?;
    let mut out = BTreeMap::new();
    for (line, f) in csv_rows(path, &text, LATENT_HEADER)? {
        let v: f64 = f[1]
            .parse()
            .map_err(|_| FormatError::parse(path, line, format!("bad value {:?}", f[1])))?;
        out.insert(f[0].to_string(), v);
    }
    Ok(out)
}

pub fn latent_to_csv(latent: &BTreeMap<String, f64>) -> String {
    let mut out = format!("{LATENT_HEADER}\n");
    for (id, v) in latent {
        let _ = writeln!(out, "{id},{v}");
    }
    out
}

/// `label,sensitivity,specificity` rows.
pub fn read_references(path: &Path) -> Result<Vec<ReferencePoint>, FormatError> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (line, f) in csv_rows(path, &text, "label,sensitivity,specificity")? {
        let num = |s: &str| -> Result<f64, FormatError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| (0.0..=1.0).contains(v))
                .ok_or_else(|| FormatError::parse(path, line, format!("bad rate {s:?}")))
        };
        out.push(ReferencePoint {
            label: f[0].to_string(),
            sensitivity: num(f[1])?,
            specificity: num(f[2])?,
        });
    }
    Ok(out)
}

/// Parses `name=path,name=path`. Names must be unique and non-empty.
pub fn parse_model_list(spec: &str) -> Result<Vec<(String, String)>, String> {
    let mut out: Vec<(String, String)> = Vec::new();
    for item in spec.split(',').filter(|s| !s.is_empty()) {
        let (name, path) = item
            .split_once('=')
            .ok_or_else(|| format!("expected name=path, found {item:?}"))?;
        if name.is_empty() || path.is_empty() {
            return Err(format!("expected name=path, found {item:?}"));
        }
        if out.iter().any(|(n, _)| n == name) {
            return Err(format!("model {name} listed twice"));
        }
        out.push((name.to_string(), path.to_string()));
    }
    if out.is_empty() {
        return Err("no models given".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig17_examples() {
        assert_eq!(fmt_sig17(0.5), "0.50000000000000000");
        assert_eq!(fmt_sig17(1.0), "1.0000000000000000");
        assert_eq!(fmt_sig17(0.0), "0.0000000000000000");
        assert_eq!(fmt_sig17(0.001234), "0.0012340000000000001");
    }

    proptest! {
        #[test]
        fn sig17_round_trips(x in 0.0f64..=1.0) {
            let s = fmt_sig17(x);
            prop_assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
            let significant = digits.trim_start_matches('0');
            prop_assert!(x == 0.0 || significant.len() == 17, "{}", s);
        }
    }

    #[test]
    fn model_list() {
        assert_eq!(
            parse_model_list("a=x.csv,b=y.csv").unwrap(),
            vec![("a".into(), "x.csv".into()), ("b".into(), "y.csv".into())]
        );
        assert!(parse_model_list("a=x,a=y").is_err());
        assert!(parse_model_list("a").is_err());
        assert!(parse_model_list("").is_err());
    }
}
