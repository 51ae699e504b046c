//! Criterion benchmarks for the hot paths: objective evaluation, threshold
//! search, calibration fitting and the per-batch steps of both algorithms.

use std::hint::black_box;

use cascade_core::calibration::{CalibrationModel, SplineBasis};
use cascade_core::engine::{run_parallel, Algorithm, RunConfig, SyntheticSpec};
use cascade_core::gamcal::{GamCalConfig, GamCalState};
use cascade_core::optimize::{objective, optimize_landscape, DEConfig, ObjectiveLandscape};
use cascade_core::oracle::LabelLookup;
use cascade_core::supg::{SupgConfig, SupgState, SupgVariant};
use cascade_core::{QualityTargets, ThresholdPair};
use criterion::{BatchSize, BenchmarkId, Criterion};

fn bimodal_scores(n: usize) -> Vec<f64> {
    SyntheticSpec::bimodal(n, 0.4, 0.4, 7).generate().unwrap().scores()
}

pub fn objective_evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("objective");
    let t = ThresholdPair::new(0.3, 0.7).unwrap();
    for n in [1_000, 100_000] {
        let scores = bimodal_scores(n);
        group.bench_with_input(BenchmarkId::new("direct", n), &scores, |b, s| {
            b.iter(|| objective(black_box(s), t, 0.5, 1.0))
        });
        let land = ObjectiveLandscape::new(&scores, 0.5, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::new("landscape", n), &land, |b, l| b.iter(|| l.value(black_box(t))));
    }
    group.finish();
}

pub fn threshold_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("differential_evolution");
    for n in [1_000, 100_000] {
        let land = ObjectiveLandscape::new(&bimodal_scores(n), 0.35, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &land, |b, l| {
            b.iter(|| optimize_landscape(l, &DEConfig::default()).unwrap())
        });
    }
    group.finish();
}

pub fn calibration_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("calibration_fit");
    for n in [300, 3_000] {
        let data = SyntheticSpec::miscalibrated(n, SyntheticSpec::DEFAULT_STRENGTH, 3).generate().unwrap();
        let (scores, labels) = (data.scores(), data.labels());
        let basis = SplineBasis::default_cubic();
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| CalibrationModel::fit(&basis, &scores, &labels, 0.6).unwrap())
        });
    }
    group.finish();
}

pub fn batch_steps(c: &mut Criterion) {
    let data = SyntheticSpec::bimodal(4_096, 0.4, 0.4, 11).generate().unwrap();
    let mut group = c.benchmark_group("batch_step");
    group.bench_function("supg_it/4096", |b| {
        let cfg = SupgConfig::new(QualityTargets::new(0.8, 0.8, 0.2).unwrap());
        b.iter_batched(
            || SupgState::new(cfg, SupgVariant::Iterative, 1).unwrap(),
            |mut state| state.step(&data.records, &mut LabelLookup::new()).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("gam_cal/4096", |b| {
        b.iter_batched(
            || GamCalState::new(GamCalConfig::default(), 1).unwrap(),
            |mut state| state.step(&data.records, &mut LabelLookup::new()).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

pub fn end_to_end(c: &mut Criterion) {
    let data = SyntheticSpec::bimodal(20_000, 0.4, 0.4, 5).generate().unwrap();
    let mut group = c.benchmark_group("run_parallel");
    group.sample_size(10);
    for algorithm in [Algorithm::SupgIt, Algorithm::GamCal] {
        for workers in [1, 4] {
            let cfg = RunConfig {
                algorithm,
                workers,
                ..RunConfig::default()
            };
            group.bench_function(format!("{algorithm}/W{workers}"), |b| {
                b.iter(|| run_parallel(&cfg, &data).unwrap())
            });
        }
    }
    group.finish();
}

pub fn benchmarks(c: &mut Criterion) {
    objective_evaluation(c);
    threshold_search(c);
    calibration_fit(c);
    batch_steps(c);
    end_to_end(c);
}
