use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

/// Output directory whose files appear only once fully written.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes into a temporary file in the same directory, then renames it into place.
    pub fn write_with(
        &self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
    ) -> anyhow::Result<PathBuf> {
        let target = self.path(name);
        let tmp = tempfile::NamedTempFile::new_in(&self.root)
            .with_context(|| format!("creating a temporary file in {}", self.root.display()))?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            body(&mut w)?;
            w.flush()?;
        }
        tmp.as_file().sync_all()?;
        tmp.persist(&target)
            .with_context(|| format!("moving output into {}", target.display()))?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Two whitespace-separated columns, skipping rows with non-finite entries.
    pub fn write_columns(&self, name: &str, header: &str, rows: &[(f64, f64)]) -> anyhow::Result<PathBuf> {
        self.write_with(name, |w| {
            writeln!(w, "# {header}")?;
            for (x, y) in rows.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                writeln!(w, "{x:.17e} {y:.17e}")?;
            }
            Ok(())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_only_target() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(&dir.path().join("nested")).unwrap();
        out.write_json("a.json", &vec![1, 2]).unwrap();
        let failed = out.write_with("b.csv", |w| {
            writeln!(w, "partial")?;
            anyhow::bail!("interrupted")
        });
        assert!(failed.is_err());
        let names: Vec<String> = fs::read_dir(dir.path().join("nested"))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(names, vec!["a.json".to_string()]);
    }

    #[test]
    fn columns_skip_non_finite() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path()).unwrap();
        let p = out
            .write_columns("p.dat", "x y", &[(1.0, 2.0), (2.0, f64::NEG_INFINITY)])
            .unwrap();
        let text = fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().count(), 2);
    }
}
