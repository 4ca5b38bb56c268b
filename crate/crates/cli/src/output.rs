//! Output files are assembled in memory and committed together.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Default, Clone)]
pub struct OutputSet {
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<String>) {
        self.files.push((name.into(), contents.into()));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    /// Writes every file to a temporary sibling first and renames only once
    /// all of them are on disk. On failure the temporaries are removed.
    pub fn commit(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        for (name, contents) in &self.files {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
            if let Err(e) = write_synced(&tmp, contents) {
                let _ = fs::remove_file(&tmp);
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                return Err(e);
            }
            staged.push((tmp, target));
        }
        let mut written = Vec::new();
        for (tmp, target) in staged {
            fs::rename(&tmp, &target)?;
            written.push(target);
        }
        Ok(written)
    }
}

fn write_synced(path: &Path, contents: &str) -> io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    f.sync_all()
}
