use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::metrics::{eer, EerPoint, RocCurve};

/// A published operating point drawn next to the model curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePoint {
    pub sensitivity: f64,
    pub specificity: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayBundle {
    pub files: Vec<OverlayFile>,
    pub eer_points: Vec<(String, EerPoint)>,
}

/// Keeps ASCII alphanumerics, `-`, `_` and `.`; anything else becomes `_`.
fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        String::from(s)
    }
}

/// `roc_<model>.csv` and `eer_<model>.csv` per curve, plus
/// `references.csv` when reference points are given. Numbers use the
/// shortest representation that reads back exactly.
pub fn roc_overlay_export(curves: &[(String, RocCurve)], references: &[ReferencePoint]) -> OverlayBundle {
    let mut files = Vec::new();
    let mut eer_points = Vec::new();
    for (model, curve) in curves {
        let stem = file_stem(model);
        let mut roc = String::from("threshold,fpr,tpr\n");
        for p in &curve.points {
            roc.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        files.push(OverlayFile {
            name: format!("roc_{stem}.csv"),
            contents: roc,
        });
        let e = eer(curve);
        files.push(OverlayFile {
            name: format!("eer_{stem}.csv"),
            contents: format!("threshold,fpr,tpr,eer\n{},{},{},{}\n", e.threshold, e.fpr, e.tpr, e.rate),
        });
        eer_points.push((model.clone(), e));
    }
    if !references.is_empty() {
        let mut refs = String::from("label,sensitivity,specificity,fpr,tpr\n");
        for r in references {
            refs.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_field(&r.label),
                r.sensitivity,
                r.specificity,
                1.0 - r.specificity,
                r.sensitivity
            ));
        }
        files.push(OverlayFile {
            name: String::from("references.csv"),
            contents: refs,
        });
    }
    OverlayBundle { files, eer_points }
}
