//! Long-format CSV outputs.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::experiment::{CurvePoint, ReliabilityCell};
use super::run::RunReport;
use crate::error::Result;

/// One line of a report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub run_id: String,
    pub algorithm: String,
    pub param_name: String,
    pub param_value: Option<f64>,
    pub seed: u64,
    #[serde(rename = "W")]
    pub workers: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub delegation: f64,
    pub oracle_calls: u64,
}

impl ReportRow {
    pub fn new(run_id: impl Into<String>, report: &RunReport, param_name: &str, param_value: Option<f64>) -> Self {
        Self {
            run_id: run_id.into(),
            algorithm: report.algorithm.name().to_string(),
            param_name: param_name.to_string(),
            param_value,
            seed: report.seed,
            workers: report.workers,
            precision: report.metrics.precision,
            recall: report.metrics.recall,
            f_beta: report.metrics.f_beta,
            delegation: report.metrics.delegation_rate,
            oracle_calls: report.oracle_calls,
        }
    }
}

/// One line of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub run_id: String,
    pub batch: usize,
    pub tau_low: f64,
    pub tau_high: f64,
    pub delegation_so_far: f64,
}

/// Trajectory rows of every worker. With more than one worker the run id
/// gains a `/w<k>` suffix so each worker's batches stay distinguishable.
pub fn trajectory_rows(run_id: &str, report: &RunReport) -> Vec<TrajectoryRow> {
    report
        .trajectory()
        .map(|p| TrajectoryRow {
            run_id: if report.workers > 1 {
                format!("{run_id}/w{}", p.worker)
            } else {
                run_id.to_string()
            },
            batch: p.batch,
            tau_low: p.thresholds.low(),
            tau_high: p.thresholds.high(),
            delegation_so_far: p.delegation_so_far,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityRow {
    pub t_p: f64,
    pub t_r: f64,
    pub runs: usize,
    pub satisfaction: f64,
    pub precision_failures: usize,
    pub recall_failures: usize,
    pub both_failures: usize,
    pub mean_delegation: f64,
}

impl From<&ReliabilityCell> for ReliabilityRow {
    fn from(c: &ReliabilityCell) -> Self {
        Self {
            t_p: c.t_p,
            t_r: c.t_r,
            runs: c.runs,
            satisfaction: c.satisfaction(),
            precision_failures: c.precision_failures,
            recall_failures: c.recall_failures,
            both_failures: c.both_failures,
            mean_delegation: c.mean_delegation,
        }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    read_csv(path)
}

pub fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRow>> {
    read_csv(path)
}

pub fn write_curve_csv(path: &Path, rows: &[CurvePoint]) -> Result<()> {
    write_csv(path, rows)
}
