//! CSV assembly and atomic-ish output writing.
//!
//! Every command builds its complete file set in memory first and only then
//! touches the filesystem, so a failing run leaves no partial output
//! directory behind.

use anyhow::{Context, Result};
use std::fs;
use std::path::{Path, PathBuf};

/// Numeric CSV cell: scientific notation, nine significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

#[derive(Default)]
pub struct OutputSet {
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn add(&mut self, name: &str, content: String) {
        self.files.push((name.to_string(), content));
    }

    /// Write every file under `dir`, creating it if needed. On any failure
    /// the files written so far are removed, along with the directory when
    /// this call created it.
    pub fn write(self, dir: &Path) -> Result<Vec<PathBuf>> {
        let created_dir = !dir.exists();
        if created_dir {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let mut written = Vec::new();
        for (name, content) in &self.files {
            let path = dir.join(name);
            match fs::write(&path, content) {
                Ok(()) => written.push(path),
                Err(e) => {
                    for w in &written {
                        let _ = fs::remove_file(w);
                    }
                    if created_dir {
                        let _ = fs::remove_dir(dir);
                    }
                    return Err(e).with_context(|| format!("writing {}", path.display()));
                }
            }
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn num_has_nine_significant_digits() {
        assert_eq!(num(0.00245), "2.45000000e-3");
        assert_eq!(num(5.714285714285714e9), "5.71428571e9");
    }
}
