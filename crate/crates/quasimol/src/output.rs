//! CSV tables, atomic file writes and run manifests.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::RunError;

/// A numeric table with `# key = value` header comments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub comments: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self { comments: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn comment(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.comments.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Values in shortest round-trip exponent form, or with `precision`
    /// significant digits.
    pub fn render(&self, precision: Option<usize>) -> String {
        let mut out = String::new();
        for (k, v) in &self.comments {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format_value(*x, precision)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Parses a table written by [`CsvTable::render`].
    pub fn parse(text: &str) -> Option<Self> {
        let mut table = CsvTable::default();
        let mut lines = text.lines();
        for line in lines.by_ref() {
            if let Some(c) = line.strip_prefix("# ") {
                let (k, v) = c.split_once(" = ")?;
                table.comments.push((k.to_string(), v.to_string()));
            } else {
                table.columns = line.split(',').map(str::to_string).collect();
                break;
            }
        }
        for line in lines {
            let row = line.split(',').map(|c| c.parse::<f64>().ok()).collect::<Option<Vec<_>>>()?;
            table.rows.push(row);
        }
        Some(table)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn format_value(x: f64, precision: Option<usize>) -> String {
    match precision {
        Some(p) if x.is_finite() => format!("{:.*e}", p.saturating_sub(1), x),
        _ => format!("{x:e}"),
    }
}

/// Writes `bytes` to a temporary sibling and renames it over `path`, so the
/// target is either absent, the old file, or complete.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(RunError::io(path, e));
    }
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

/// Record of one run: what produced which files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_hash: String,
    pub version: String,
    pub outputs: Vec<OutputRecord>,
    pub timings: Vec<Timing>,
    /// Per-point failures; the run continued past them.
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config_hash: String) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            config_hash,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            timings: Vec::new(),
            failures: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Writes `contents` into `dir/file` and records its checksum.
    pub fn emit(&mut self, dir: &Path, file: &str, contents: &str) -> Result<PathBuf, RunError> {
        let path = dir.join(file);
        write_atomic(&path, contents.as_bytes())?;
        self.outputs.push(OutputRecord { file: file.to_string(), sha256: sha256_hex(contents.as_bytes()), bytes: contents.len() });
        Ok(path)
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        self.timings.push(Timing { stage: stage.to_string(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, RunError> {
        let path = dir.join(format!("manifest-{}.json", self.subcommand));
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip_is_exact() {
        let mut t = CsvTable::new(&["x", "y"]);
        t.comment("atom", "Li-7");
        for i in 0..50 {
            let x = 0.1 * f64::from(i) + 1e-17;
            t.push(vec![x, (x * 7.3).sin() * 1e-23]);
        }
        t.push(vec![f64::NAN, -0.0]);
        let back = CsvTable::parse(&t.render(None)).unwrap();
        assert_eq!(back.comments, t.comments);
        for (a, b) in back.rows.iter().zip(&t.rows) {
            for (u, v) in a.iter().zip(b) {
                assert!(u.to_bits() == v.to_bits() || (u.is_nan() && v.is_nan()));
            }
        }
    }

    #[test]
    fn precision_limits_digits() {
        assert_eq!(format_value(1.234_567_89, Some(3)), "1.23e0");
        assert_eq!(format_value(f64::NAN, Some(3)), "NaN");
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.csv");
        write_atomic(&p, b"first").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "second");
        let leftovers: Vec<_> = std::fs::read_dir(p.parent().unwrap()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn failed_write_leaves_no_target() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("blocked");
        std::fs::create_dir(&target).unwrap();
        std::fs::write(target.join("x"), b"keep").unwrap();
        assert!(write_atomic(&target, b"data").is_err());
        assert!(target.is_dir());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn checksum_is_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
