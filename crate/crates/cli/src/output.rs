//! Output bookkeeping so a failed command leaves nothing half-written.

use std::path::{Path, PathBuf};

use nirsc::{Error, Result};

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
}

impl Outputs {
    /// Creates `dir` (and missing parents), remembering what was new.
    pub fn dir(&mut self, dir: &Path) -> Result<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur.filter(|d| !d.as_os_str().is_empty() && !d.exists()) {
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.dirs.extend(missing);
        Ok(())
    }

    /// Registers `path` before something else writes it.
    pub fn claim(&mut self, path: &Path) -> Result<PathBuf> {
        if let Some(parent) = path.parent() {
            self.dir(parent)?;
        }
        self.files.push(path.to_path_buf());
        Ok(path.to_path_buf())
    }

    pub fn write(&mut self, path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
        self.claim(path)?;
        std::fs::write(path, contents).map_err(|e| Error::io(path, e))
    }

    /// Removes every claimed file and every directory this run created.
    pub fn discard(self) {
        for f in self.files.iter().rev() {
            let _ = std::fs::remove_file(f);
        }
        for d in &self.dirs {
            let _ = std::fs::remove_dir(d);
        }
    }
}
