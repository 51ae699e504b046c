//! Parameter sweeps, target reliability grids and calibration diagnostics.

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, RunConfig};
use super::data::Dataset;
use super::run::{run_parallel, RunReport};
use crate::calibration::{CalibrationModel, PlattModel, SplineBasis};
use crate::error::{CascadeError, Result};
use crate::metrics::expected_calibration_error;

/// One run of a sweep. A failed run keeps its error instead of aborting the sweep.
#[derive(Debug)]
pub struct SweepRun {
    pub run_id: usize,
    pub param: String,
    pub value: f64,
    pub seed: u64,
    pub outcome: Result<RunReport>,
}

/// Runs the cross product of `values` and `seeds` for one parameter. Each
/// run regenerates (or reloads) its data with its own seed.
pub fn sweep(template: &ExperimentConfig, param: &str, values: &[f64], seeds: &[u64]) -> Result<Vec<SweepRun>> {
    if values.is_empty() || seeds.is_empty() {
        return Err(CascadeError::InvalidInput("sweep needs at least one value and one seed".into()));
    }
    // fail fast on a bad parameter name or range before any run starts
    for &v in values {
        template.clone().set(param, &v.to_string())?;
    }
    let mut runs = Vec::with_capacity(values.len() * seeds.len());
    for &value in values {
        for &seed in seeds {
            let mut cfg = template.clone();
            cfg.set(param, &value.to_string())?;
            cfg.run.seed = seed;
            let outcome = cfg
                .validate()
                .and_then(|_| cfg.data.load(seed))
                .and_then(|data| run_parallel(&cfg.run, &data));
            runs.push(SweepRun {
                run_id: runs.len(),
                param: param.to_string(),
                value,
                seed,
                outcome,
            });
        }
    }
    Ok(runs)
}

/// Outcome counts for one `(t_p, t_r)` target pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityCell {
    pub t_p: f64,
    pub t_r: f64,
    pub runs: usize,
    pub satisfied: usize,
    /// Runs whose precision fell short, including those that also missed recall.
    pub precision_failures: usize,
    /// Runs whose recall fell short, including those that also missed precision.
    pub recall_failures: usize,
    pub both_failures: usize,
    pub mean_delegation: f64,
}

impl ReliabilityCell {
    pub fn satisfaction(&self) -> f64 {
        self.satisfied as f64 / self.runs as f64
    }

    /// Every run is either satisfied or counted under at least one metric.
    pub fn is_consistent(&self) -> bool {
        self.runs - self.satisfied == self.precision_failures + self.recall_failures - self.both_failures
    }
}

/// Runs the template on one dataset for every target pair and seed.
pub fn reliability_grid(
    template: &RunConfig,
    dataset: &Dataset,
    t_p: &[f64],
    t_r: &[f64],
    seeds: &[u64],
) -> Result<Vec<ReliabilityCell>> {
    if t_p.is_empty() || t_r.is_empty() || seeds.is_empty() {
        return Err(CascadeError::InvalidInput("reliability grid needs targets and seeds".into()));
    }
    let mut cells = Vec::with_capacity(t_p.len() * t_r.len());
    for &p in t_p {
        for &r in t_r {
            let mut cell = ReliabilityCell {
                t_p: p,
                t_r: r,
                runs: 0,
                satisfied: 0,
                precision_failures: 0,
                recall_failures: 0,
                both_failures: 0,
                mean_delegation: 0.0,
            };
            for &seed in seeds {
                let mut cfg = template.clone();
                cfg.supg.t_p = p;
                cfg.supg.t_r = r;
                cfg.seed = seed;
                let m = run_parallel(&cfg, dataset)?.metrics;
                let p_ok = m.precision >= p;
                let r_ok = m.recall >= r;
                cell.runs += 1;
                cell.satisfied += (p_ok && r_ok) as usize;
                cell.precision_failures += (!p_ok) as usize;
                cell.recall_failures += (!r_ok) as usize;
                cell.both_failures += (!p_ok && !r_ok) as usize;
                cell.mean_delegation += m.delegation_rate;
            }
            cell.mean_delegation /= cell.runs as f64;
            cells.push(cell);
        }
    }
    Ok(cells)
}

/// One point of a calibration curve: the fitted log-odds and its standard
/// error, the Platt probability, and the raw score taken as a probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub s: f64,
    pub f_hat: f64,
    pub se: f64,
    pub platt: f64,
    pub raw: f64,
}

#[derive(Debug, Clone)]
pub struct CalibrationDemo {
    pub model: CalibrationModel,
    pub platt: PlattModel,
    pub curve: Vec<CurvePoint>,
    /// Held-out ECE of raw, Platt and spline-calibrated (posterior mean) scores.
    pub ece_raw: f64,
    pub ece_platt: f64,
    pub ece_calibrated: f64,
}

/// Fits both calibrators on `train`, scores them on `test`, and samples the
/// curves at `points` evenly spaced scores in `[0, 1]`.
pub fn calibration_demo(
    train: &Dataset,
    test: &Dataset,
    basis: &SplineBasis,
    lambda: f64,
    points: usize,
    bins: usize,
) -> Result<CalibrationDemo> {
    if points < 2 {
        return Err(CascadeError::InvalidInput("calibration curve needs at least 2 points".into()));
    }
    let (scores, labels) = (train.scores(), train.labels());
    let model = CalibrationModel::fit(basis, &scores, &labels, lambda)?;
    let platt = PlattModel::fit(&scores, &labels)?;
    let curve = (0..points)
        .map(|i| {
            let s = i as f64 / (points - 1) as f64;
            let (f_hat, se) = model.predict_mean_se(s);
            CurvePoint {
                s,
                f_hat,
                se,
                platt: platt.probability(s),
                raw: s,
            }
        })
        .collect();
    let (ts, tl) = (test.scores(), test.labels());
    let platt_scores: Vec<f64> = ts.iter().map(|&s| platt.probability(s)).collect();
    let calibrated: Vec<f64> = ts.iter().map(|&s| model.probability(s)).collect();
    Ok(CalibrationDemo {
        ece_raw: expected_calibration_error(&ts, &tl, bins)?,
        ece_platt: expected_calibration_error(&platt_scores, &tl, bins)?,
        ece_calibrated: expected_calibration_error(&calibrated, &tl, bins)?,
        model,
        platt,
        curve,
    })
}
