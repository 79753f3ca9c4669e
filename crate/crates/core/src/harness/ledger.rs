//! Append-only JSON Lines run ledger (`runs.jsonl`).
//!
//! Every line is one [`LedgerEntry`]. Wall-clock data lives only in the
//! `timing` field so two runs of the same config can be compared byte for
//! byte after [`strip_timing`].

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{BclError, Result};

pub const LEDGER_FILE: &str = "runs.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub unix_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_secs: Option<f64>,
}

impl Timing {
    pub fn now(elapsed_secs: Option<f64>) -> Self {
        let unix_secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Self {
            unix_secs,
            elapsed_secs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    /// `bootstrap`, `phase`, `eval`, `final`, `run` or `train`.
    pub kind: String,
    pub experiment: String,
    pub method: String,
    pub seed: u64,
    pub data: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

/// Handle on a ledger file. Appends go through one `write` per line.
#[derive(Debug, Clone)]
pub struct Ledger {
    path: PathBuf,
}

impl Ledger {
    /// Opens (creating the directory if needed) without truncating.
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            path: dir.join(LEDGER_FILE),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, entry: &LedgerEntry) -> Result<()> {
        let mut line = serde_json::to_string(entry)?;
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(line.as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn read(&self) -> Result<Vec<LedgerEntry>> {
        read_ledger(&self.path)
    }
}

pub fn read_ledger(path: &Path) -> Result<Vec<LedgerEntry>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                BclError::Integrity(format!("{}:{}: unreadable ledger line: {e}", path.display(), i + 1))
            })
        })
        .collect()
}

/// Ledger text with every `timing` field removed, one entry per line.
pub fn strip_timing(text: &str) -> Result<String> {
    let mut out = String::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let mut v: Value = serde_json::from_str(line)?;
        if let Value::Object(map) = &mut v {
            map.remove("timing");
        }
        out.push_str(&serde_json::to_string(&v)?);
        out.push('\n');
    }
    Ok(out)
}
