//! JSON report and CSV datasets.

use std::path::Path;

use serde::Serialize;

use super::config::Provenance;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Warn,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub name: String,
    pub status: Status,
    pub data: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub tolerances: Provenance,
    pub entries: Vec<Entry>,
}

impl Report {
    pub fn new(command: &str, seed: u64, tolerances: Provenance) -> Self {
        Self {
            command: command.into(),
            seed,
            tolerances,
            entries: Vec::new(),
        }
    }

    pub fn push<T: Serialize>(&mut self, name: &str, status: Status, data: &T) -> Result<()> {
        println!("{:<28} {}", name, serde_json::to_string(&status)?.trim_matches('"'));
        self.entries.push(Entry {
            name: name.into(),
            status,
            data: serde_json::to_value(data)?,
        });
        Ok(())
    }

    /// No entry failed; warnings do not count as failures.
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Fail)
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(dir.join(name), text)?;
        Ok(())
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
