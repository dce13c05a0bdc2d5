//! Append-only JSON-lines run records and per-run manifests.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use districtbench_core::stats::{Block, RunMatrix};
use serde::{Deserialize, Serialize};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// One metric value of one run at one eval point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub config_hash: String,
    pub schema_hash: String,
    pub seed: u64,
    pub eval_point: u64,
    pub block: Block,
    pub metric: String,
    pub value: f64,
}

/// Writes records as one JSON object per line, flushing after each batch.
pub struct RecordWriter {
    out: BufWriter<File>,
}

impl RecordWriter {
    /// Starts a fresh records file, replacing any earlier one.
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self {
            out: BufWriter::new(file),
        })
    }

    pub fn open_append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening {}", path.display()))?;
        Ok(Self {
            out: BufWriter::new(file),
        })
    }

    pub fn write_batch(&mut self, records: &[RunRecord]) -> Result<()> {
        for r in records {
            serde_json::to_writer(&mut self.out, r)?;
            self.out.write_all(b"\n")?;
        }
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        out.push(r);
    }
    Ok(out)
}

/// Every records file below `root`, in path order.
pub fn find_record_files(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).with_context(|| format!("listing {}", dir.display()))? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == RECORDS_FILE) {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn collect_records(root: &Path) -> Result<Vec<RunRecord>> {
    let mut all = Vec::new();
    for path in find_record_files(root)? {
        all.extend(read_records(&path)?);
    }
    Ok(all)
}

pub fn to_matrix(records: &[RunRecord]) -> RunMatrix {
    let mut m = RunMatrix::new();
    for r in records {
        m.insert(r.block, &r.algorithm, r.seed, r.eval_point, &r.metric, r.value);
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Completed,
    Failed,
}

/// Timing and outcome of one run, kept apart from the records so that the
/// records themselves are reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub algorithm: String,
    pub config_hash: String,
    pub seed: u64,
    pub status: RunStatus,
    pub error: Option<String>,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub wall_clock_secs: Option<f64>,
    pub best_eval_point: Option<u64>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(self)?).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(seed: u64, value: f64) -> RunRecord {
        RunRecord {
            algorithm: "rbc".into(),
            config_hash: "abc".into(),
            schema_hash: "def".into(),
            seed,
            eval_point: 0,
            block: Block::Standard,
            metric: "average_score".into(),
            value,
        }
    }

    #[test]
    fn round_trip_and_discovery() {
        let dir = tempfile::tempdir().unwrap();
        let run = dir.path().join("runs/rbc/seed_1");
        fs::create_dir_all(&run).unwrap();
        let path = run.join(RECORDS_FILE);
        let mut w = RecordWriter::create(&path).unwrap();
        w.write_batch(&[rec(1, 0.5), rec(1, 0.1 + 0.2)]).unwrap();
        drop(w);
        let mut w = RecordWriter::open_append(&path).unwrap();
        w.write_batch(&[rec(1, 1e-300)]).unwrap();
        drop(w);
        let back = collect_records(dir.path()).unwrap();
        assert_eq!(back, vec![rec(1, 0.5), rec(1, 0.1 + 0.2), rec(1, 1e-300)]);
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("{\"algorithm\":\"rbc\""));
    }

    #[test]
    fn corrupt_line_reports_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(RECORDS_FILE);
        fs::write(&path, "{\"algorithm\":1}\n").unwrap();
        let err = read_records(&path).unwrap_err();
        assert!(format!("{err:#}").contains(":1"));
    }
}
