//! Calibration-based cascade with a cost/quality objective.
//!
//! Starts with identity calibration and an all-uncertain region, samples
//! the uncertain region uniformly, and retrains the calibration model and
//! thresholds whenever the labeled sample has at least doubled. Uncertain
//! records that are not sampled fall back to `g >= 0.5`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{fit_bootstrap, BootstrapEnsemble, CalibrationModel, Calibrator, SplineBasis};
use crate::error::{CascadeError, Result};
use crate::hash::combine;
use crate::optimize::{optimize_landscape, DEConfig, ObjectiveLandscape};
use crate::oracle::Oracle;
use crate::types::{route, Decision, Prediction, ScoredRecord, ThresholdPair};

/// Calibrated-score threshold for uncertain records the oracle did not see.
pub const FALLBACK_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationBackend {
    /// Spline logistic fit with Laplace covariance.
    Laplace,
    /// Spline logistic fits on bootstrap resamples.
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GamCalConfig {
    /// Weight of normalized error against delegation in the objective.
    pub alpha: f64,
    pub beta: f64,
    /// Per-batch oracle budget as a fraction of the batch.
    pub rho: f64,
    /// Minimum labels of each class before the first fit.
    pub n_min: usize,
    pub lambda: f64,
    pub knots: usize,
    pub backend: CalibrationBackend,
    /// Ensemble size for the bootstrap backend.
    pub bootstrap_members: usize,
    pub de: DEConfig,
    /// Capacity of the uniform reservoir of seen records used by the optimizer.
    pub reservoir_capacity: usize,
}

impl Default for GamCalConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 1.0,
            rho: 0.1,
            n_min: 5,
            lambda: 0.6,
            knots: SplineBasis::DEFAULT_KNOTS,
            backend: CalibrationBackend::Laplace,
            bootstrap_members: 100,
            de: DEConfig::default(),
            reservoir_capacity: 100_000,
        }
    }
}

impl GamCalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CascadeError::InvalidInput(msg));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !(self.beta > 0.0) {
            return bad(format!("beta {} must be positive", self.beta));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return bad(format!("rho {} outside (0, 1]", self.rho));
        }
        if !(self.lambda > 0.0) {
            return bad(format!("lambda {} must be positive", self.lambda));
        }
        if self.reservoir_capacity == 0 {
            return bad("reservoir_capacity must be at least 1".into());
        }
        if self.bootstrap_members == 0 {
            return bad("bootstrap_members must be at least 1".into());
        }
        SplineBasis::uniform(self.knots, SplineBasis::DEFAULT_DEGREE, SplineBasis::DEFAULT_CLIP)?;
        self.de.validate()
    }
}

/// A fitted calibration of either backend.
#[derive(Debug, Clone)]
pub enum FittedCalibration {
    Laplace(CalibrationModel),
    Bootstrap(BootstrapEnsemble),
}

impl Calibrator for FittedCalibration {
    fn calibrated(&self, score: f64, q: f64) -> f64 {
        match self {
            FittedCalibration::Laplace(m) => m.calibrated(score, q),
            FittedCalibration::Bootstrap(e) => e.calibrated(score, q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrainEvent {
    /// Zero-based index of the batch that triggered the retrain.
    pub batch: usize,
    pub sample_size: usize,
    pub thresholds: ThresholdPair,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct GamCalStepOutcome {
    pub predictions: Vec<Prediction>,
    pub sampled: usize,
    pub retrained: bool,
    /// Fraction of the batch routed into the uncertain region.
    pub uncertain_fraction: f64,
}

/// Per-worker state. Single writer.
#[derive(Debug, Clone)]
pub struct GamCalState {
    config: GamCalConfig,
    basis: SplineBasis,
    scores: Vec<f64>,
    labels: Vec<bool>,
    n_last: usize,
    model: Option<FittedCalibration>,
    thresholds: ThresholdPair,
    reservoir: Vec<(f64, f64)>,
    seen: u64,
    batches: usize,
    events: Vec<RetrainEvent>,
    rng: ChaCha8Rng,
}

impl GamCalState {
    pub fn new(config: GamCalConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let basis = SplineBasis::uniform(config.knots, SplineBasis::DEFAULT_DEGREE, SplineBasis::DEFAULT_CLIP)?;
        Ok(Self {
            config,
            basis,
            scores: Vec::new(),
            labels: Vec::new(),
            n_last: 0,
            model: None,
            thresholds: ThresholdPair::FULL,
            reservoir: Vec::new(),
            seen: 0,
            batches: 0,
            events: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn config(&self) -> &GamCalConfig {
        &self.config
    }

    pub fn thresholds(&self) -> ThresholdPair {
        self.thresholds
    }

    pub fn model(&self) -> Option<&FittedCalibration> {
        self.model.as_ref()
    }

    pub fn is_cold(&self) -> bool {
        self.model.is_none()
    }

    pub fn sample_size(&self) -> usize {
        self.scores.len()
    }

    pub fn n_last(&self) -> usize {
        self.n_last
    }

    pub fn retrain_events(&self) -> &[RetrainEvent] {
        &self.events
    }

    /// Identity during cold start, else the stochastic calibrated score.
    pub fn calibrated_score(&self, record: &ScoredRecord) -> f64 {
        match &self.model {
            None => record.proxy_score,
            Some(m) => m.calibrated(record.proxy_score, record.quantile()),
        }
    }

    /// The sample has at least doubled since the last fit and holds
    /// `n_min` labels of each class.
    pub fn should_retrain(&self) -> bool {
        let n = self.scores.len();
        let positives = self.labels.iter().filter(|&&y| y).count();
        let negatives = n - positives;
        n > 0 && n >= 2 * self.n_last && positives.min(negatives) >= self.config.n_min
    }

    /// Uniform draw without replacement of `min(floor(rho |B|), |U|)`
    /// indices from the uncertain region `U`.
    pub fn uniform_uncertain_sample(&mut self, calibrated: &[f64]) -> Vec<usize> {
        let uncertain: Vec<usize> = (0..calibrated.len())
            .filter(|&i| route(calibrated[i], self.thresholds) == Decision::Delegate)
            .collect();
        let budget = ((self.config.rho * calibrated.len() as f64).floor() as usize).min(uncertain.len());
        let mut picked: Vec<usize> = sample(&mut self.rng, uncertain.len(), budget)
            .into_iter()
            .map(|k| uncertain[k])
            .collect();
        picked.sort_unstable();
        picked
    }

    fn observe(&mut self, batch: &[ScoredRecord]) {
        let cap = self.config.reservoir_capacity;
        for r in batch {
            self.seen += 1;
            let item = (r.proxy_score, r.quantile());
            if self.reservoir.len() < cap {
                self.reservoir.push(item);
            } else {
                let j = self.rng.random_range(0..self.seen);
                if (j as usize) < cap {
                    self.reservoir[j as usize] = item;
                }
            }
        }
    }

    fn retrain(&mut self) -> Result<()> {
        let fitted = match self.config.backend {
            CalibrationBackend::Laplace => FittedCalibration::Laplace(CalibrationModel::fit(
                &self.basis,
                &self.scores,
                &self.labels,
                self.config.lambda,
            )?),
            CalibrationBackend::Bootstrap => FittedCalibration::Bootstrap(fit_bootstrap(
                &self.scores,
                &self.labels,
                self.config.bootstrap_members,
                self.config.lambda,
                &self.basis,
                &mut self.rng,
            )?),
        };
        let population: Vec<f64> = self
            .reservoir
            .iter()
            .map(|&(s, q)| fitted.calibrated(s, q))
            .collect();
        let landscape = ObjectiveLandscape::new(&population, self.config.alpha, self.config.beta)?;
        let de = DEConfig {
            seed: combine(self.config.de.seed, self.events.len() as u64),
            ..self.config.de
        };
        let best = optimize_landscape(&landscape, &de)?;
        self.model = Some(fitted);
        self.thresholds = best.thresholds;
        self.n_last = self.scores.len();
        self.events.push(RetrainEvent {
            batch: self.batches,
            sample_size: self.n_last,
            thresholds: best.thresholds,
            objective: best.value,
        });
        Ok(())
    }

    /// Processes one batch: score, sample, label, maybe retrain, route.
    pub fn step<O: Oracle + ?Sized>(
        &mut self,
        batch: &[ScoredRecord],
        oracle: &mut O,
    ) -> Result<GamCalStepOutcome> {
        if batch.is_empty() {
            return Err(CascadeError::InvalidInput("empty batch".into()));
        }
        let calibrated: Vec<f64> = batch.iter().map(|r| self.calibrated_score(r)).collect();
        let picked = self.uniform_uncertain_sample(&calibrated);
        let mut oracle_labels: Vec<Option<bool>> = vec![None; batch.len()];
        for &i in &picked {
            let label = oracle.label(&batch[i])?;
            oracle_labels[i] = Some(label);
            self.scores.push(batch[i].proxy_score);
            self.labels.push(label);
        }
        self.observe(batch);

        let retrained = self.should_retrain();
        let calibrated = if retrained {
            self.retrain()?;
            batch.iter().map(|r| self.calibrated_score(r)).collect()
        } else {
            calibrated
        };

        let mut uncertain = 0usize;
        let predictions = batch
            .iter()
            .zip(&calibrated)
            .zip(&oracle_labels)
            .map(|((r, &g), sampled)| {
                let decision = route(g, self.thresholds);
                if decision == Decision::Delegate {
                    uncertain += 1;
                }
                match sampled {
                    Some(label) => Prediction {
                        id: r.id,
                        decision,
                        label: *label,
                        oracle_called: true,
                    },
                    None => Prediction {
                        id: r.id,
                        decision,
                        label: decision.predicted_label().unwrap_or(g >= FALLBACK_THRESHOLD),
                        oracle_called: false,
                    },
                }
            })
            .collect();
        self.batches += 1;
        Ok(GamCalStepOutcome {
            predictions,
            sampled: picked.len(),
            retrained,
            uncertain_fraction: uncertain as f64 / batch.len() as f64,
        })
    }
}

pub fn gamcal_step<O: Oracle + ?Sized>(
    state: &mut GamCalState,
    batch: &[ScoredRecord],
    oracle: &mut O,
) -> Result<GamCalStepOutcome> {
    state.step(batch, oracle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::uniform_open;
    use crate::oracle::{FailingOracle, LabelLookup};
    use rand_distr::{Beta, Distribution};

    fn bimodal(n: usize, seed: u64) -> Vec<ScoredRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = Beta::new(6.0, 2.5).unwrap();
        let neg = Beta::new(2.5, 6.0).unwrap();
        (0..n as u64)
            .map(|id| {
                let y = rng.random::<f64>() < 0.4;
                let s = if y { pos.sample(&mut rng) } else { neg.sample(&mut rng) };
                ScoredRecord::new(id, s, y, uniform_open(seed, id)).unwrap()
            })
            .collect()
    }

    #[test]
    fn cold_start_is_identity_and_all_uncertain() {
        let state = GamCalState::new(GamCalConfig::default(), 1).unwrap();
        let r = ScoredRecord::new(0, 0.42, true, 0.3).unwrap();
        assert_eq!(state.calibrated_score(&r), 0.42);
        assert!(state.is_cold());
        assert_eq!(state.thresholds(), ThresholdPair::FULL);
    }

    #[test]
    fn retrain_gate() {
        let mut state = GamCalState::new(GamCalConfig::default(), 1).unwrap();
        assert!(!state.should_retrain());
        state.scores = vec![0.5; 10];
        state.labels = (0..10).map(|i| i < 5).collect();
        assert!(state.should_retrain());
        state.n_last = 100;
        state.scores = vec![0.5; 150];
        state.labels = (0..150).map(|i| i % 2 == 0).collect();
        assert!(!state.should_retrain());
        state.scores = vec![0.5; 200];
        state.labels = (0..200).map(|i| i < 3).collect();
        assert!(!state.should_retrain());
    }

    #[test]
    fn uncertain_sample_budget() {
        let mut state = GamCalState::new(GamCalConfig { rho: 0.5, ..GamCalConfig::default() }, 2).unwrap();
        let g: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let picked = state.uniform_uncertain_sample(&g);
        assert_eq!(picked.len(), 10);
        let mut dedup = picked.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 10);

        state.thresholds = ThresholdPair::new(0.3, 0.45).unwrap();
        let picked = state.uniform_uncertain_sample(&g);
        assert_eq!(picked, vec![6, 7, 8]);

        state.thresholds = ThresholdPair::collapsed(0.5).unwrap();
        assert!(state.uniform_uncertain_sample(&g).is_empty());
    }

    #[test]
    fn full_budget_first_batch_is_perfect() {
        let data = bimodal(200, 3);
        let mut state = GamCalState::new(GamCalConfig { rho: 1.0, ..GamCalConfig::default() }, 3).unwrap();
        let out = gamcal_step(&mut state, &data, &mut LabelLookup::new()).unwrap();
        assert_eq!(out.sampled, data.len());
        for (r, p) in data.iter().zip(&out.predictions) {
            assert!(p.oracle_called);
            assert_eq!(p.label, r.oracle_label);
        }
    }

    #[test]
    fn streaming_invariants() {
        let data = bimodal(6000, 4);
        let cfg = GamCalConfig { rho: 0.05, alpha: 0.35, ..GamCalConfig::default() };
        let mut state = GamCalState::new(cfg, 4).unwrap();
        let mut oracle = LabelLookup::new();
        let mut prev = state.thresholds();
        let mut total_sampled = 0;
        for batch in data.chunks(200) {
            let was_cold = state.is_cold();
            let out = state.step(batch, &mut oracle).unwrap();
            total_sampled += out.sampled;
            assert!(out.sampled <= (0.05 * batch.len() as f64).floor() as usize);
            if was_cold && !out.retrained {
                for (r, p) in batch.iter().zip(&out.predictions) {
                    if r.proxy_score < 1.0 {
                        assert_eq!(p.decision, Decision::Delegate);
                    }
                }
            }
            if !out.retrained {
                assert_eq!(state.thresholds(), prev);
            }
            prev = state.thresholds();
        }
        assert_eq!(oracle.calls() as usize, total_sampled);
        let events = state.retrain_events();
        assert!(!events.is_empty());
        let first = events[0].sample_size as f64;
        let bound = (total_sampled as f64 / first).log2().floor() as usize + 1;
        assert!(events.len() <= bound, "{} events, bound {bound}", events.len());
    }

    #[test]
    fn reservoir_is_capped() {
        let data = bimodal(500, 5);
        let cfg = GamCalConfig { reservoir_capacity: 64, ..GamCalConfig::default() };
        let mut state = GamCalState::new(cfg, 5).unwrap();
        state.step(&data, &mut LabelLookup::new()).unwrap();
        assert_eq!(state.reservoir.len(), 64);
        assert_eq!(state.seen, 500);
    }

    #[test]
    fn bootstrap_backend_runs() {
        let data = bimodal(1000, 6);
        let cfg = GamCalConfig {
            rho: 0.2,
            backend: CalibrationBackend::Bootstrap,
            bootstrap_members: 5,
            ..GamCalConfig::default()
        };
        let mut state = GamCalState::new(cfg, 6).unwrap();
        for batch in data.chunks(250) {
            state.step(batch, &mut LabelLookup::new()).unwrap();
        }
        assert!(!state.is_cold());
    }

    #[test]
    fn errors() {
        let mut state = GamCalState::new(GamCalConfig { rho: 1.0, ..GamCalConfig::default() }, 7).unwrap();
        assert!(state.step(&[], &mut LabelLookup::new()).is_err());
        let data = bimodal(20, 7);
        assert!(matches!(
            state.step(&data, &mut FailingOracle { fail_on: 3 }),
            Err(CascadeError::OracleMissing(3))
        ));
        assert!(GamCalState::new(GamCalConfig { alpha: 1.3, ..GamCalConfig::default() }, 0).is_err());
    }
}
