use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Record of one command invocation, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub tool_version: String,
    /// Fully resolved configuration, loadable again with `--config`.
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    /// Path → sha256 of the input bytes.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of a file, or of a directory as the hash of its sorted
/// `name\0digest\n` entries (non-recursive).
pub fn digest_path(path: &Path) -> std::io::Result<String> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        entries.retain(|p| p.is_file());
        entries.sort();
        let mut h = Sha256::new();
        for p in entries {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            h.update(name.as_bytes());
            h.update([0]);
            h.update(sha256_hex(&fs::read(&p)?).as_bytes());
            h.update([b'\n']);
        }
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    } else {
        Ok(sha256_hex(&fs::read(path)?))
    }
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn digest_all<'a, I>(paths: I) -> std::io::Result<BTreeMap<String, String>>
where
    I: IntoIterator<Item = &'a Path>,
{
    paths
        .into_iter()
        .map(|p| Ok((p.display().to_string(), digest_path(p)?)))
        .collect()
}

pub fn manifest_path(out: &Path, command: &str) -> PathBuf {
    out.join(format!("{command}.manifest.json"))
}
