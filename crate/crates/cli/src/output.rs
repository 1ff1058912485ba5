use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{CliError, Result};

/// Artifacts written only once every one of them has been produced: each is
/// staged in a temporary file next to its destination and renamed into place.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    pub fn add_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Internal(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.add(name, text);
        Ok(())
    }

    /// Writes everything into `dir`, creating it if needed.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let dest = dir.join(name);
            let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::write(&dest, e))?;
            tmp.write_all(bytes).map_err(|e| CliError::write(&dest, e))?;
            tmp.as_file().sync_all().map_err(|e| CliError::write(&dest, e))?;
            staged.push((tmp, dest));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, dest) in staged {
            tmp.persist(&dest).map_err(|e| CliError::write(&dest, e.error))?;
            written.push(dest);
        }
        Ok(written)
    }
}

/// Plain CSV with a header; numbers use the shortest round-trip form.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_writes_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::default();
        a.add("a.txt", "one");
        a.add_json("b.json", &vec![1, 2]).unwrap();
        let out = dir.path().join("nested");
        let written = a.commit(&out).unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(fs::read_to_string(out.join("a.txt")).unwrap(), "one");
        // No temporaries left behind.
        assert_eq!(fs::read_dir(&out).unwrap().count(), 2);
    }

    #[test]
    fn csv_layout() {
        let s = csv(&["x", "y"], vec![vec![num(1.0), num(0.25)]]);
        assert_eq!(s, "x,y\n1e0,2.5e-1\n");
    }
}
