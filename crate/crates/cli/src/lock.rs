//! One writer per run directory.

use crate::error::AppError;
use std::fs;
use std::path::{Path, PathBuf};

const LOCK_NAME: &str = ".pumpstation.lock";

/// Exclusive lock on a run directory, released on drop. A leftover lock
/// from a crashed run must be removed by hand; the error says so.
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(out: &Path) -> Result<Self, AppError> {
        fs::create_dir_all(out).map_err(|e| AppError::runtime(format!("{}: {e}", out.display())))?;
        let path = out.join(LOCK_NAME);
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => {
                let _ = fs::write(&path, std::process::id().to_string());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(AppError::runtime(format!(
                    "run directory is locked by {} (remove it if the previous run crashed)",
                    path.display()
                )))
            }
            Err(e) => Err(AppError::runtime(format!("{}: {e}", path.display()))),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let lock = RunLock::acquire(dir.path()).unwrap();
        assert!(RunLock::acquire(dir.path()).is_err());
        drop(lock);
        let again = RunLock::acquire(dir.path()).unwrap();
        drop(again);
    }
}
