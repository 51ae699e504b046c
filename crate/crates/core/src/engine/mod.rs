//! Streaming execution: datasets, synthetic generators, configuration,
//! per-worker runs, the multi-worker harness, experiment drivers and CSV output.
//!
//! Workers never share state. Each gets a contiguous slice of a seeded
//! shuffle of the data and a seed hashed from the run seed and its index, so
//! a run is reproducible for a fixed seed and worker count.

mod config;
mod data;
mod experiment;
mod io;
mod run;
mod synth;

pub use config::{
    Algorithm, DataConfig, ExperimentConfig, RunConfig, StudyConfig, SupgParams, KEYS,
};
pub use data::{load_dataset, write_dataset, DataFormat, Dataset};
pub use experiment::{
    calibration_demo, reliability_grid, sweep, CalibrationDemo, CurvePoint, ReliabilityCell, SweepRun,
};
pub use io::{
    read_csv, read_report_csv, read_trajectory_csv, trajectory_rows, write_csv, write_curve_csv,
    write_report_csv, write_trajectory_csv, ReliabilityRow, ReportRow, TrajectoryRow,
};
pub use run::{
    partition, run_parallel, run_parallel_with, run_worker, worker_seed, RunReport, TrajectoryPoint,
    WorkerReport,
};
pub use synth::{
    class_beta, generate_bimodal, generate_miscalibrated, s_distortion, SyntheticKind, SyntheticSpec,
};
