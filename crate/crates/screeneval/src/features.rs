//! Per-session feature files.
//!
//! `<id>.sevf` holds the frame matrix:
//!
//! ```text
//! magic "SEVF" | version u32 | n_frames u64 | n_mels u32 | hop_ms u32 | win_ms u32
//! n_frames * n_mels f32, row-major
//! ```
//!
//! all little-endian. `<id>.json` is a sidecar describing how the frames
//! are cut into segments and which frames of each segment are real.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use screeneval_core::dsp::{segment_frames, FeatureMatrix};
use screeneval_core::model::{pool_segment, PooledSegment};

use crate::formats::FormatError;

pub const FEATURE_MAGIC: &[u8; 4] = b"SEVF";
pub const FEATURE_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 4 + 4 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Log mel filter-bank frames, pooled per segment.
    Filterbank,
    /// One row of bag-of-words frequencies.
    Text,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Filterbank => "filterbank",
            FeatureKind::Text => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentInfo {
    pub start_frame: usize,
    pub real_frames: usize,
    pub n_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub session_id: String,
    pub kind: FeatureKind,
    pub frames_per_segment: usize,
    /// Segment `i` keeps its first `real_frames` frames; the rest is padding.
    pub segments: Vec<SegmentInfo>,
}

/// Session ids become file names, so only `[A-Za-z0-9._-]` is allowed.
pub fn check_session_id(id: &str) -> Result<(), String> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(())
    } else {
        Err(format!("session id {id:?} cannot be used as a file name"))
    }
}

pub fn matrix_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.sevf"))
}

pub fn sidecar_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.json"))
}

pub fn encode_matrix(m: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.data.len() * 4);
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.n_frames as u64).to_le_bytes());
    out.extend_from_slice(&(m.n_mels as u32).to_le_bytes());
    out.extend_from_slice(&m.hop_ms.to_le_bytes());
    out.extend_from_slice(&m.win_ms.to_le_bytes());
    for v in &m.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_matrix(bytes: &[u8]) -> Result<FeatureMatrix, String> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != FEATURE_MAGIC {
        return Err("not a feature file".into());
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = u32_at(4);
    if version != FEATURE_VERSION {
        return Err(format!("unsupported feature file version {version}"));
    }
    let n_frames = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let n_mels = u32_at(16) as usize;
    let hop_ms = u32_at(20);
    let win_ms = u32_at(24);
    let expected = n_frames
        .checked_mul(n_mels)
        .and_then(|n| n.checked_mul(4))
        .ok_or("frame count overflows")?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != expected {
        return Err(format!("expected {expected} data bytes, found {}", body.len()));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(FeatureMatrix {
        data,
        n_frames,
        n_mels,
        hop_ms,
        win_ms,
    })
}

/// Sidecar for a filter-bank matrix cut into `frames_per_segment` segments.
pub fn filterbank_sidecar(id: &str, m: &FeatureMatrix, frames_per_segment: usize) -> Result<FeatureSidecar, String> {
    let segments = segment_frames(m, frames_per_segment)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|s| SegmentInfo {
            start_frame: s.start_frame,
            real_frames: s.real_frames,
            n_frames: s.n_frames,
        })
        .collect();
    Ok(FeatureSidecar {
        session_id: id.to_string(),
        kind: FeatureKind::Filterbank,
        frames_per_segment,
        segments,
    })
}

pub fn text_sidecar(id: &str, has_words: bool) -> FeatureSidecar {
    FeatureSidecar {
        session_id: id.to_string(),
        kind: FeatureKind::Text,
        frames_per_segment: 1,
        segments: vec![SegmentInfo {
            start_frame: 0,
            real_frames: usize::from(has_words),
            n_frames: 1,
        }],
    }
}

/// Model inputs for one session, checked against the sidecar.
pub fn pooled_from(m: &FeatureMatrix, sidecar: &FeatureSidecar) -> Result<Vec<PooledSegment>, String> {
    match sidecar.kind {
        FeatureKind::Text => {
            if m.n_frames != 1 || sidecar.segments.len() != 1 {
                return Err("text features must hold exactly one row".into());
            }
            let mut p = PooledSegment::dense(m.row(0).iter().map(|v| *v as f64).collect());
            p.real_frames = sidecar.segments[0].real_frames.min(1);
            Ok(vec![p])
        }
        FeatureKind::Filterbank => {
            let segments = segment_frames(m, sidecar.frames_per_segment).map_err(|e| e.to_string())?;
            let consistent = segments.len() == sidecar.segments.len()
                && segments.iter().zip(&sidecar.segments).all(|(s, info)| {
                    s.start_frame == info.start_frame && s.real_frames == info.real_frames && s.n_frames == info.n_frames
                });
            if !consistent {
                return Err("sidecar segments disagree with the feature matrix".into());
            }
            Ok(segments.iter().map(pool_segment).collect())
        }
    }
}

pub fn write_features(dir: &Path, m: &FeatureMatrix, sidecar: &FeatureSidecar) -> Result<Vec<PathBuf>, FormatError> {
    let mp = matrix_path(dir, &sidecar.session_id);
    let sp = sidecar_path(dir, &sidecar.session_id);
    fs::write(&mp, encode_matrix(m)).map_err(|e| FormatError::io(&mp, e))?;
    let json = serde_json::to_string(sidecar).expect("sidecar serializes");
    fs::write(&sp, json).map_err(|e| FormatError::io(&sp, e))?;
    Ok(vec![mp, sp])
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("no features for session {0}")]
    Missing(String),
    #[error("{path}: {message}")]
    Corrupt { path: String, message: String },
}

/// Reads and pools one session's features.
pub fn load_pooled(dir: &Path, id: &str) -> Result<Vec<PooledSegment>, FeatureError> {
    load_session(dir, id).map(|(_, p)| p)
}

/// [`load_pooled`] plus the feature kind named in the sidecar.
pub fn load_session(dir: &Path, id: &str) -> Result<(FeatureKind, Vec<PooledSegment>), FeatureError> {
    let mp = matrix_path(dir, id);
    let sp = sidecar_path(dir, id);
    if !mp.is_file() || !sp.is_file() {
        return Err(FeatureError::Missing(id.to_string()));
    }
    let corrupt = |path: &Path, message: String| FeatureError::Corrupt {
        path: path.display().to_string(),
        message,
    };
    let bytes = fs::read(&mp).map_err(|e| corrupt(&mp, e.to_string()))?;
    let m = decode_matrix(&bytes).map_err(|e| corrupt(&mp, e))?;
    let side_text = fs::read_to_string(&sp).map_err(|e| corrupt(&sp, e.to_string()))?;
    let side: FeatureSidecar = serde_json::from_str(&side_text).map_err(|e| corrupt(&sp, e.to_string()))?;
    if side.session_id != id {
        return Err(corrupt(&sp, format!("sidecar names session {}", side.session_id)));
    }
    let pooled = pooled_from(&m, &side).map_err(|e| corrupt(&mp, e))?;
    Ok((side.kind, pooled))
}
