//! One function per subcommand. Each writes its CSV files into the output
//! directory and returns the summary lines to print.

use std::path::Path;

use anyhow::{bail, Context, Result};
use cascade_core::calibration::SplineBasis;
use cascade_core::engine::{
    calibration_demo, reliability_grid, run_parallel, sweep, trajectory_rows, write_csv, write_curve_csv,
    write_dataset, write_report_csv, write_trajectory_csv, DataFormat, ExperimentConfig, ReliabilityRow,
    ReportRow, RunReport, TrajectoryRow,
};
use cascade_core::Metrics;

pub const REPORT_FILE: &str = "report.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const RELIABILITY_FILE: &str = "reliability.csv";
pub const CURVE_FILE: &str = "calibration_curve.csv";

/// What a subcommand produced. `failed` lists the run ids that errored.
#[derive(Debug, Default)]
pub struct Outcome {
    pub summary: Vec<String>,
    pub failed: Vec<String>,
}

/// `F1 (delegation%)`, the cell format of the summary tables.
pub fn cell(m: &Metrics) -> String {
    format!("{:.3} ({:.1}%)", m.f_beta, 100.0 * m.delegation_rate)
}

fn seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.study.seeds as u64).map(|k| cfg.run.seed + k).collect()
}

fn write_reports(out: &Path, rows: &[ReportRow], trajectories: &[TrajectoryRow]) -> Result<()> {
    write_report_csv(&out.join(REPORT_FILE), rows)?;
    write_trajectory_csv(&out.join(TRAJECTORY_FILE), trajectories)?;
    Ok(())
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let data = cfg.data.load(cfg.run.seed)?;
    let report = run_parallel(&cfg.run, &data)?;
    let (param, value) = match cfg.run.algorithm.native_param() {
        Some(p) => (p, cfg.get(p).and_then(|v| v.parse().ok())),
        None => ("none", None),
    };
    let row = ReportRow::new("0", &report, param, value);
    write_reports(out, &[row], &trajectory_rows("0", &report))?;
    let m = &report.metrics;
    Ok(Outcome {
        summary: vec![
            format!("{} on {} (n = {}, W = {})", report.algorithm, data.name, report.records, report.workers),
            format!(
                "F1 {}  precision {:.3}  recall {:.3}  oracle calls {}",
                cell(m),
                m.precision,
                m.recall,
                report.oracle_calls
            ),
        ],
        failed: Vec::new(),
    })
}

pub fn sweep_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let param = match (&cfg.study.sweep_param, cfg.run.algorithm.native_param()) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => p.to_string(),
        (None, None) => bail!("{} has no native parameter; set `sweep_param`", cfg.run.algorithm),
    };
    let runs = sweep(cfg, &param, &cfg.study.sweep_values, &seeds(cfg))?;
    let mut rows = Vec::new();
    let mut trajectories = Vec::new();
    let mut outcome = Outcome::default();
    for r in &runs {
        match &r.outcome {
            Ok(report) => {
                let id = r.run_id.to_string();
                rows.push(ReportRow::new(id.clone(), report, &param, Some(r.value)));
                trajectories.extend(trajectory_rows(&id, report));
            }
            Err(e) => {
                eprintln!("run {} ({param} = {}, seed {}) failed: {e}", r.run_id, r.value, r.seed);
                outcome.failed.push(r.run_id.to_string());
            }
        }
    }
    write_reports(out, &rows, &trajectories)?;

    outcome.summary.push(format!("{} sweep over `{param}`, {} seed(s)", cfg.run.algorithm, cfg.study.seeds));
    let mut best: Option<(f64, String)> = None;
    for &value in &cfg.study.sweep_values {
        let reports: Vec<&RunReport> = runs
            .iter()
            .filter(|r| r.value == value)
            .filter_map(|r| r.outcome.as_ref().ok())
            .collect();
        if reports.is_empty() {
            continue;
        }
        let m = Metrics {
            precision: mean(reports.iter().map(|r| r.metrics.precision)),
            recall: mean(reports.iter().map(|r| r.metrics.recall)),
            f_beta: mean(reports.iter().map(|r| r.metrics.f_beta)),
            delegation_rate: mean(reports.iter().map(|r| r.metrics.delegation_rate)),
        };
        let line = format!("{param} = {value:<6} F1 {}", cell(&m));
        if best.as_ref().is_none_or(|(f, _)| m.f_beta > *f) {
            best = Some((m.f_beta, format!("best: {param} = {value}, F1 {}", cell(&m))));
        }
        outcome.summary.push(line);
    }
    if let Some((_, line)) = best {
        outcome.summary.push(line);
    }
    Ok(outcome)
}

pub fn reliability(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    if cfg.run.algorithm.supg_variant().is_none() {
        bail!("reliability grids need a SUPG algorithm, got {}", cfg.run.algorithm);
    }
    let data = cfg.data.load(cfg.run.seed)?;
    let cells = reliability_grid(
        &cfg.run,
        &data,
        &cfg.study.reliability_t_p,
        &cfg.study.reliability_t_r,
        &seeds(cfg),
    )?;
    let rows: Vec<ReliabilityRow> = cells.iter().map(ReliabilityRow::from).collect();
    write_csv(&out.join(RELIABILITY_FILE), &rows)?;

    let mut summary = vec![format!(
        "{} target satisfaction on {} ({} seed(s) per cell); rows t_p, columns t_r",
        cfg.run.algorithm, data.name, cfg.study.seeds
    )];
    let header: Vec<String> = cfg.study.reliability_t_r.iter().map(|r| format!("{r:>6}")).collect();
    summary.push(format!("{:>6} {}", "", header.join(" ")));
    for &p in &cfg.study.reliability_t_p {
        let line: Vec<String> = cells
            .iter()
            .filter(|c| c.t_p == p)
            .map(|c| format!("{:>5.0}%", 100.0 * c.satisfaction()))
            .collect();
        summary.push(format!("{p:>6} {}", line.join(" ")));
    }
    Ok(Outcome { summary, failed: Vec::new() })
}

pub fn parallel(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut trajectories = Vec::new();
    let mut outcome = Outcome::default();
    outcome.summary.push(format!("{} across worker counts, {} seed(s)", cfg.run.algorithm, cfg.study.seeds));
    for &w in &cfg.study.parallel_workers {
        let mut per_w = Vec::new();
        for seed in seeds(cfg) {
            let id = rows.len() + outcome.failed.len();
            let mut run = cfg.run.clone();
            run.workers = w;
            run.seed = seed;
            let result = cfg.data.load(seed).and_then(|d| run_parallel(&run, &d));
            match result {
                Ok(report) => {
                    rows.push(ReportRow::new(id.to_string(), &report, "W", Some(w as f64)));
                    trajectories.extend(trajectory_rows(&id.to_string(), &report));
                    per_w.push(report.metrics);
                }
                Err(e) => {
                    eprintln!("run {id} (W = {w}, seed {seed}) failed: {e}");
                    outcome.failed.push(id.to_string());
                }
            }
        }
        if !per_w.is_empty() {
            let m = Metrics {
                precision: mean(per_w.iter().map(|m| m.precision)),
                recall: mean(per_w.iter().map(|m| m.recall)),
                f_beta: mean(per_w.iter().map(|m| m.f_beta)),
                delegation_rate: mean(per_w.iter().map(|m| m.delegation_rate)),
            };
            outcome.summary.push(format!("W = {w:<3} F1 {}", cell(&m)));
        }
    }
    write_reports(out, &rows, &trajectories)?;
    Ok(outcome)
}

/// Fits on the configured data and scores a fresh draw of 10,000 records
/// (synthetic data) or the same file with new quantiles (file data).
pub fn calibrate_demo(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let train = cfg.data.load(cfg.run.seed)?;
    let mut held_out = cfg.data.clone();
    if held_out.dataset != "file" {
        held_out.n = 10_000;
    }
    let test = held_out.load(cfg.run.seed.wrapping_add(1))?;
    let g = &cfg.run.gamcal;
    let basis = SplineBasis::uniform(g.knots, 3, SplineBasis::DEFAULT_CLIP)?;
    let demo = calibration_demo(&train, &test, &basis, g.lambda, 201, 10)?;
    write_curve_csv(&out.join(CURVE_FILE), &demo.curve)?;
    Ok(Outcome {
        summary: vec![
            format!("calibration on {} (train n = {}, held-out n = {})", train.name, train.len(), test.len()),
            format!("held-out ECE: raw {:.4}", demo.ece_raw),
            format!("held-out ECE: Platt {:.4}", demo.ece_platt),
            format!("held-out ECE: spline {:.4}", demo.ece_calibrated),
        ],
        failed: Vec::new(),
    })
}

pub fn generate(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    if cfg.data.dataset == "file" {
        bail!("generate needs a synthetic `dataset` (bimodal, miscalibrated or imbalance)");
    }
    let data = cfg.data.load(cfg.run.seed)?;
    let format = cfg.data.format.unwrap_or(DataFormat::Csv);
    let file = out.join(match format {
        DataFormat::Csv => "dataset.csv",
        DataFormat::Jsonl => "dataset.jsonl",
    });
    write_dataset(&data, &file, format).with_context(|| format!("writing {}", file.display()))?;
    Ok(Outcome {
        summary: vec![format!(
            "wrote {} records of {} ({:.1}% positive) to {}",
            data.len(),
            data.name,
            100.0 * data.positive_rate(),
            file.display()
        )],
        failed: Vec::new(),
    })
}
