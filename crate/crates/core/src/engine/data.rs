//! Datasets of scored records and their CSV / JSONL encodings.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::hash::uniform_open;
use crate::types::ScoredRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl DataFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(DataFormat::Csv),
            "jsonl" | "ndjson" => Some(DataFormat::Jsonl),
            _ => None,
        }
    }
}

impl std::str::FromStr for DataFormat {
    type Err = CascadeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "jsonl" => Ok(DataFormat::Jsonl),
            other => Err(CascadeError::InvalidInput(format!("unknown data format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub records: Vec<ScoredRecord>,
}

impl Dataset {
    /// Checks that ids are exactly `0..n`.
    pub fn new(name: impl Into<String>, records: Vec<ScoredRecord>) -> Result<Self> {
        let n = records.len() as u64;
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.id >= n || !seen.insert(r.id) {
                return Err(CascadeError::InvalidInput(format!(
                    "record ids must be unique and cover 0..{n}; found id {}",
                    r.id
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn positive_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.oracle_label).count() as f64 / self.records.len() as f64
    }

    pub fn scores(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.proxy_score).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.oracle_label).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    id: Option<u64>,
    proxy_score: f64,
    oracle_label: u8,
}

fn to_record(row: Row, index: usize, seed: u64, path: &str, line: usize) -> Result<ScoredRecord> {
    let parse = |message: String| CascadeError::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let label = match row.oracle_label {
        0 => false,
        1 => true,
        other => return Err(parse(format!("oracle_label must be 0 or 1, got {other}"))),
    };
    if !(0.0..=1.0).contains(&row.proxy_score) {
        return Err(parse(format!("proxy_score {} outside [0, 1]", row.proxy_score)));
    }
    let id = row.id.unwrap_or(index as u64);
    ScoredRecord::new(id, row.proxy_score, label, uniform_open(seed, id)).map_err(|e| parse(e.to_string()))
}

/// Reads `id` (optional), `proxy_score` and `oracle_label` columns/keys.
/// Record quantiles are derived from `(seed, id)`.
pub fn load_dataset(path: &Path, format: DataFormat, seed: u64) -> Result<Dataset> {
    let shown = path.display().to_string();
    let mut records = Vec::new();
    match format {
        DataFormat::Csv => {
            let mut reader = csv::Reader::from_path(path)?;
            for (index, row) in reader.deserialize::<Row>().enumerate() {
                // header is line 1
                let line = index + 2;
                let row = row.map_err(|e| CascadeError::Parse {
                    path: shown.clone(),
                    line: e.position().map(|p| p.line() as usize).unwrap_or(line),
                    message: e.to_string(),
                })?;
                records.push(to_record(row, index, seed, &shown, line)?);
            }
        }
        DataFormat::Jsonl => {
            let reader = BufReader::new(File::open(path)?);
            let mut index = 0;
            for (k, line) in reader.lines().enumerate() {
                let line_no = k + 1;
                let text = line?;
                if text.trim().is_empty() {
                    continue;
                }
                let row: Row = serde_json::from_str(&text).map_err(|e| CascadeError::Parse {
                    path: shown.clone(),
                    line: line_no,
                    message: e.to_string(),
                })?;
                records.push(to_record(row, index, seed, &shown, line_no)?);
                index += 1;
            }
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, records)
}

pub fn write_dataset(dataset: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    let rows = dataset.records.iter().map(|r| Row {
        id: Some(r.id),
        proxy_score: r.proxy_score,
        oracle_label: r.oracle_label as u8,
    });
    match format {
        DataFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        DataFormat::Jsonl => {
            let mut w = std::io::BufWriter::new(File::create(path)?);
            for row in rows {
                serde_json::to_writer(&mut w, &row).map_err(|e| CascadeError::InvalidInput(e.to_string()))?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
