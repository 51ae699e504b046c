//! Per-worker streaming execution and the multi-worker harness.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Algorithm, RunConfig};
use super::data::Dataset;
use crate::error::{CascadeError, Result};
use crate::gamcal::GamCalState;
use crate::hash::combine;
use crate::metrics::compute_metrics;
use crate::oracle::{LabelLookup, Oracle};
use crate::supg::SupgState;
use crate::types::{route, ConfusionCounts, Decision, Metrics, Prediction, ScoredRecord, ThresholdPair};

/// Thresholds in force after one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub worker: usize,
    pub batch: usize,
    pub thresholds: ThresholdPair,
    /// Oracle calls so far divided by records so far, within this worker.
    pub delegation_so_far: f64,
    /// Fraction of this batch routed into the uncertain region.
    pub uncertain_fraction: f64,
    /// The thresholds were recomputed during this batch.
    pub refreshed: bool,
}

/// Outcome of one worker over its partition.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerReport {
    pub metrics: Metrics,
    pub confusion: ConfusionCounts,
    pub oracle_calls: u64,
    pub records: usize,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Aggregate outcome of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub workers: usize,
    pub metrics: Metrics,
    pub confusion: ConfusionCounts,
    pub oracle_calls: u64,
    pub records: usize,
    pub per_worker: Vec<WorkerReport>,
}

impl RunReport {
    /// Threshold trajectories of all workers, worker by worker.
    pub fn trajectory(&self) -> impl Iterator<Item = &TrajectoryPoint> {
        self.per_worker.iter().flat_map(|w| w.trajectory.iter())
    }
}

fn metrics_for(confusion: &ConfusionCounts, oracle_calls: u64, records: usize, beta: f64) -> Metrics {
    let mut m = compute_metrics(confusion, beta);
    m.delegation_rate = if records == 0 { 0.0 } else { oracle_calls as f64 / records as f64 };
    m
}

enum Engine {
    Supg(Box<SupgState>),
    GamCal(Box<GamCalState>),
    Proxy,
    Oracle,
}

struct BatchResult {
    predictions: Vec<Prediction>,
    thresholds: ThresholdPair,
    refreshed: bool,
}

impl Engine {
    fn new(config: &RunConfig, seed: u64) -> Result<Self> {
        Ok(match config.algorithm {
            Algorithm::SupgIt | Algorithm::SupgSp | Algorithm::SupgBase => {
                let variant = config.algorithm.supg_variant().expect("supg algorithm");
                Engine::Supg(Box::new(SupgState::new(config.supg_config()?, variant, seed)?))
            }
            Algorithm::GamCal => Engine::GamCal(Box::new(GamCalState::new(config.gamcal_config()?, seed)?)),
            Algorithm::ProxyOnly => Engine::Proxy,
            Algorithm::OracleOnly => Engine::Oracle,
        })
    }

    fn step<O: Oracle + ?Sized>(&mut self, batch: &[ScoredRecord], oracle: &mut O) -> Result<BatchResult> {
        match self {
            Engine::Supg(state) => {
                let out = state.step(batch, oracle)?;
                Ok(BatchResult {
                    predictions: out.predictions,
                    thresholds: state.thresholds(),
                    refreshed: !out.refreshes.is_empty(),
                })
            }
            Engine::GamCal(state) => {
                let out = state.step(batch, oracle)?;
                Ok(BatchResult {
                    predictions: out.predictions,
                    thresholds: state.thresholds(),
                    refreshed: out.retrained,
                })
            }
            Engine::Proxy => {
                let t = ThresholdPair::collapsed(0.5)?;
                let predictions = batch
                    .iter()
                    .map(|r| {
                        let decision = route(r.proxy_score, t);
                        Prediction {
                            id: r.id,
                            decision,
                            label: decision == Decision::Accept,
                            oracle_called: false,
                        }
                    })
                    .collect();
                Ok(BatchResult {
                    predictions,
                    thresholds: t,
                    refreshed: false,
                })
            }
            Engine::Oracle => {
                let predictions = batch
                    .iter()
                    .map(|r| {
                        Ok(Prediction {
                            id: r.id,
                            decision: Decision::Delegate,
                            label: oracle.label(r)?,
                            oracle_called: true,
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(BatchResult {
                    predictions,
                    thresholds: ThresholdPair::FULL,
                    refreshed: false,
                })
            }
        }
    }
}

/// Streams one partition through the configured algorithm in batches of
/// `batch_size`. Quality is scored against the records' hidden labels.
pub fn run_worker<O: Oracle + ?Sized>(
    config: &RunConfig,
    partition: &[ScoredRecord],
    oracle: &mut O,
    worker: usize,
    seed: u64,
) -> Result<WorkerReport> {
    if partition.is_empty() {
        return Err(CascadeError::InvalidInput(format!("worker {worker} has an empty partition")));
    }
    config.validate()?;
    let mut engine = Engine::new(config, seed)?;
    let mut confusion = ConfusionCounts::default();
    let mut oracle_calls = 0u64;
    let mut seen = 0usize;
    let mut trajectory = Vec::with_capacity(partition.len().div_ceil(config.batch_size));
    for (batch_index, batch) in partition.chunks(config.batch_size).enumerate() {
        let out = engine.step(batch, oracle)?;
        let mut uncertain = 0usize;
        for (record, p) in batch.iter().zip(&out.predictions) {
            debug_assert_eq!(record.id, p.id);
            confusion.record(p.label, record.oracle_label);
            oracle_calls += p.oracle_called as u64;
            uncertain += (p.decision == Decision::Delegate) as usize;
        }
        seen += batch.len();
        trajectory.push(TrajectoryPoint {
            worker,
            batch: batch_index,
            thresholds: out.thresholds,
            delegation_so_far: oracle_calls as f64 / seen as f64,
            uncertain_fraction: uncertain as f64 / batch.len() as f64,
            refreshed: out.refreshed,
        });
    }
    Ok(WorkerReport {
        metrics: metrics_for(&confusion, oracle_calls, seen, config.beta),
        confusion,
        oracle_calls,
        records: seen,
        trajectory,
    })
}

/// Seed a worker derives from the run seed.
pub fn worker_seed(run_seed: u64, worker: usize) -> u64 {
    combine(run_seed, worker as u64)
}

/// Seeded shuffle, then `workers` contiguous parts whose sizes differ by at most one.
pub fn partition(records: &[ScoredRecord], workers: usize, seed: u64) -> Vec<Vec<ScoredRecord>> {
    let mut shuffled = records.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = shuffled.len();
    let mut parts = Vec::with_capacity(workers);
    let mut start = 0;
    for w in 0..workers {
        let len = n / workers + usize::from(w < n % workers);
        parts.push(shuffled[start..start + len].to_vec());
        start += len;
    }
    parts
}

/// Runs `config.workers` independent workers on threads, each with its own
/// oracle from `make_oracle`, and aggregates their confusion counts.
pub fn run_parallel_with<F, O>(config: &RunConfig, dataset: &Dataset, make_oracle: F) -> Result<RunReport>
where
    F: Fn(usize) -> O + Sync,
    O: Oracle,
{
    config.validate()?;
    let w = config.workers;
    if dataset.len() < w {
        return Err(CascadeError::InvalidInput(format!(
            "{} records cannot feed {w} workers",
            dataset.len()
        )));
    }
    let parts = partition(&dataset.records, w, config.seed);
    let results: Vec<Result<WorkerReport>> = if w == 1 {
        vec![run_worker(config, &parts[0], &mut make_oracle(0), 0, worker_seed(config.seed, 0))]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = parts
                .iter()
                .enumerate()
                .map(|(k, part)| {
                    let make_oracle = &make_oracle;
                    scope.spawn(move || {
                        run_worker(config, part, &mut make_oracle(k), k, worker_seed(config.seed, k))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker thread panicked"))
                .collect()
        })
    };
    let per_worker = results.into_iter().collect::<Result<Vec<_>>>()?;
    let confusion: ConfusionCounts = per_worker.iter().map(|r| r.confusion).sum();
    let oracle_calls = per_worker.iter().map(|r| r.oracle_calls).sum();
    let records = per_worker.iter().map(|r| r.records).sum();
    Ok(RunReport {
        algorithm: config.algorithm,
        seed: config.seed,
        workers: w,
        metrics: metrics_for(&confusion, oracle_calls, records, config.beta),
        confusion,
        oracle_calls,
        records,
        per_worker,
    })
}

/// `run_parallel_with` using the records' own labels as the oracle.
pub fn run_parallel(config: &RunConfig, dataset: &Dataset) -> Result<RunReport> {
    run_parallel_with(config, dataset, |_| LabelLookup::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::synth::SyntheticSpec;
    use approx::assert_relative_eq;

    fn data(n: usize, overlap: f64, seed: u64) -> Dataset {
        SyntheticSpec::bimodal(n, 0.4, overlap, seed).generate().unwrap()
    }

    fn config(algorithm: Algorithm) -> RunConfig {
        RunConfig {
            algorithm,
            batch_size: 250,
            ..RunConfig::default()
        }
    }

    #[test]
    fn baselines() {
        let d = data(2000, 0.4, 1);
        let proxy = run_parallel(&config(Algorithm::ProxyOnly), &d).unwrap();
        assert_eq!(proxy.metrics.delegation_rate, 0.0);
        assert_eq!(proxy.oracle_calls, 0);
        let mut c = ConfusionCounts::default();
        for r in &d.records {
            c.record(r.proxy_score >= 0.5, r.oracle_label);
        }
        assert_eq!(proxy.confusion, c);

        let oracle = run_parallel(&config(Algorithm::OracleOnly), &d).unwrap();
        assert_eq!(oracle.metrics.delegation_rate, 1.0);
        assert_eq!(oracle.metrics.f_beta, 1.0);
    }

    #[test]
    fn gamcal_beats_proxy() {
        let d = data(8000, 0.4, 2);
        let mut cfg = config(Algorithm::GamCal);
        cfg.gamcal.alpha = 0.5;
        let g = run_parallel(&cfg, &d).unwrap();
        let p = run_parallel(&config(Algorithm::ProxyOnly), &d).unwrap();
        assert!(g.metrics.f_beta > p.metrics.f_beta, "gamcal {} proxy {}", g.metrics.f_beta, p.metrics.f_beta);
    }

    #[test]
    fn single_worker_is_run_worker() {
        let d = data(1500, 0.5, 3);
        let cfg = config(Algorithm::SupgIt);
        let report = run_parallel(&cfg, &d).unwrap();
        let parts = partition(&d.records, 1, cfg.seed);
        let direct = run_worker(&cfg, &parts[0], &mut LabelLookup::new(), 0, worker_seed(cfg.seed, 0)).unwrap();
        assert_eq!(report.per_worker[0], direct);
        assert_eq!(report.confusion, direct.confusion);
    }

    #[test]
    fn aggregation_identities() {
        let d = data(4000, 0.5, 4);
        for algorithm in [Algorithm::SupgIt, Algorithm::GamCal] {
            let mut cfg = config(algorithm);
            cfg.workers = 4;
            let r = run_parallel(&cfg, &d).unwrap();
            assert_eq!(r.per_worker.len(), 4);
            let summed: ConfusionCounts = r.per_worker.iter().map(|w| w.confusion).sum();
            assert_eq!(r.confusion, summed);
            assert_eq!(r.records, d.len());
            // precision is the predicted-positive weighted mean of worker precisions
            let weighted: f64 = r
                .per_worker
                .iter()
                .map(|w| w.metrics.precision * w.confusion.predicted_positive())
                .sum::<f64>()
                / r.confusion.predicted_positive();
            assert_relative_eq!(r.metrics.precision, weighted, epsilon = 1e-12);
            assert!(r.oracle_calls as usize <= d.len());
        }
    }

    #[test]
    fn repeatable() {
        let d = data(3000, 0.5, 5);
        for algorithm in Algorithm::ALL {
            let mut cfg = config(algorithm);
            cfg.workers = 3;
            assert_eq!(run_parallel(&cfg, &d).unwrap(), run_parallel(&cfg, &d).unwrap());
        }
    }

    #[test]
    fn partitions_cover_everything_once() {
        let d = data(1003, 0.5, 6);
        let parts = partition(&d.records, 4, 9);
        let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![251, 251, 251, 250]);
        let mut ids: Vec<u64> = parts.iter().flatten().map(|r| r.id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..1003).collect::<Vec<_>>());
    }

    #[test]
    fn sampled_predictions_match_oracle() {
        let d = data(2000, 0.5, 7);
        let mut cfg = config(Algorithm::GamCal);
        cfg.batch_size = 200;
        let parts = partition(&d.records, 1, 0);
        let mut engine = Engine::new(&cfg, 1).unwrap();
        for batch in parts[0].chunks(200) {
            let out = engine.step(batch, &mut LabelLookup::new()).unwrap();
            for (r, p) in batch.iter().zip(&out.predictions) {
                if p.oracle_called {
                    assert_eq!(p.label, r.oracle_label);
                }
            }
        }
    }

    #[test]
    fn errors_propagate() {
        let d = data(100, 0.5, 8);
        let mut cfg = config(Algorithm::OracleOnly);
        cfg.workers = 2;
        let res = run_parallel_with(&cfg, &d, |_| crate::oracle::FailingOracle { fail_on: 42 });
        assert!(matches!(res, Err(CascadeError::OracleMissing(42))));
        cfg.workers = 200;
        assert!(run_parallel(&cfg, &d).is_err());
    }
}
