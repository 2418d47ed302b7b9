use std::fs;
use std::path::{Path, PathBuf};

use crate::formats::FormatError;

/// Files written by one command. Unless [`OutputSet::commit`] is called,
/// everything written through the set is deleted when it is dropped, so a
/// failed command leaves no partial outputs behind.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
    created_dirs: Vec<PathBuf>,
    committed: bool,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<Self, FormatError> {
        let mut set = OutputSet {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            created_dirs: Vec::new(),
            committed: false,
        };
        set.ensure_dir(dir)?;
        Ok(set)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Creates `dir` if needed, remembering it for cleanup when it is new.
    pub fn ensure_dir(&mut self, dir: &Path) -> Result<(), FormatError> {
        if !dir.exists() {
            let mut missing = Vec::new();
            let mut cur = Some(dir);
            while let Some(d) = cur.filter(|d| !d.as_os_str().is_empty() && !d.exists()) {
                missing.push(d.to_path_buf());
                cur = d.parent();
            }
            fs::create_dir_all(dir).map_err(|e| FormatError::io(dir, e))?;
            self.created_dirs.extend(missing.into_iter().rev());
        }
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, FormatError> {
        let p = self.path(name);
        self.write_at(&p, contents)?;
        Ok(p)
    }

    pub fn write_at(&mut self, path: &Path, contents: impl AsRef<[u8]>) -> Result<(), FormatError> {
        self.track(path);
        fs::write(path, contents).map_err(|e| FormatError::io(path, e))
    }

    /// Registers a file written by other code.
    pub fn track(&mut self, path: &Path) {
        self.written.push(path.to_path_buf());
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        // created_dirs grows parent-first, so undo it back to front
        for d in self.created_dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }
}
