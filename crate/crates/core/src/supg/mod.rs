//! Target-based cascades: the recall-only baseline, the single-pass joint
//! cascade, and the iterative joint cascade.
//!
//! All three share one step function. Each batch draws
//! `floor(rho * |batch|)` records by defensively-mixed importance sampling,
//! labels them with the oracle in sub-batches (refreshing thresholds after
//! each), then routes the rest of the batch.

mod estimate;
mod sample;

pub use estimate::{
    balanced_threshold, corrected_recall_target, f1_threshold, lb, precision_threshold,
    recall_threshold, ub, weighted_tpr,
};
pub use sample::{AccumulatedSample, LabeledObservation};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::oracle::Oracle;
use crate::sampling::draw_importance_sample;
use crate::types::{route, Prediction, QualityTargets, ScoredRecord, ThresholdPair};

/// What happens to non-sampled records that land between the thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualStrategy {
    /// Ask the oracle.
    DelegateAll,
    /// Classify by the proxy at the sample's F1-optimal threshold.
    FallbackThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupgVariant {
    /// Samples accumulate across batches.
    Iterative,
    /// Thresholds come from the current batch's sample only.
    SinglePass,
    /// Recall-only single threshold; no uncertain region.
    Base,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupgConfig {
    pub targets: QualityTargets,
    /// Importance share of the sampling weights.
    pub eta: f64,
    /// Per-batch oracle sampling budget as a fraction of the batch.
    pub rho: f64,
    /// Upper slack of the clipped recall target.
    pub clip_delta: f64,
    pub residual: ResidualStrategy,
    /// Oracle labels acquired between threshold refreshes.
    pub sub_batch: usize,
}

impl SupgConfig {
    pub fn new(targets: QualityTargets) -> Self {
        Self {
            targets,
            eta: 0.5,
            rho: 0.1,
            clip_delta: 0.05,
            residual: ResidualStrategy::DelegateAll,
            sub_batch: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(CascadeError::InvalidInput(format!("rho {} outside (0, 1]", self.rho)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(CascadeError::InvalidInput(format!("eta {} outside [0, 1]", self.eta)));
        }
        if !(self.clip_delta >= 0.0) {
            return Err(CascadeError::InvalidInput(format!(
                "clip_delta {} must be non-negative",
                self.clip_delta
            )));
        }
        if self.sub_batch == 0 {
            return Err(CascadeError::InvalidInput("sub_batch must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of one batch step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub predictions: Vec<Prediction>,
    /// Thresholds after each sub-batch refresh, in order.
    pub refreshes: Vec<ThresholdPair>,
    /// Whether any refresh in this batch collapsed the thresholds.
    pub collapsed: bool,
    pub sampled: usize,
}

/// Per-worker state. Single writer; move it between threads, never share it.
#[derive(Debug, Clone)]
pub struct SupgState {
    config: SupgConfig,
    variant: SupgVariant,
    sample: AccumulatedSample,
    thresholds: ThresholdPair,
    rng: ChaCha8Rng,
}

impl SupgState {
    pub fn new(config: SupgConfig, variant: SupgVariant, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            variant,
            sample: AccumulatedSample::new(),
            thresholds: ThresholdPair::FULL,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn thresholds(&self) -> ThresholdPair {
        self.thresholds
    }

    pub fn sample(&self) -> &AccumulatedSample {
        &self.sample
    }

    pub fn config(&self) -> &SupgConfig {
        &self.config
    }

    pub fn variant(&self) -> SupgVariant {
        self.variant
    }

    /// Recomputes thresholds from the current sample. Returns whether the
    /// joint thresholds conflicted and were collapsed. With no positive
    /// observations yet the previous thresholds stay in force.
    fn refresh(&mut self) -> Result<bool> {
        if self.sample.weighted_positive_total() <= 0.0 {
            return Ok(false);
        }
        let targets = self.config.targets;
        match self.variant {
            SupgVariant::Base => {
                let tau_hat = recall_threshold(&self.sample, targets.t_r)?;
                // unclipped correction: the ceiling is only the [0, 1] range
                let corrected = corrected_recall_target(&self.sample, tau_hat, &targets, 1.0)?;
                let tau = recall_threshold(&self.sample, corrected)?;
                self.thresholds = ThresholdPair::collapsed(tau)?;
                Ok(false)
            }
            SupgVariant::Iterative | SupgVariant::SinglePass => {
                let est = estimate::joint_thresholds(&self.sample, &targets, self.config.clip_delta)?;
                self.thresholds = ThresholdPair::new(est.low, est.high)?;
                Ok(est.collapsed)
            }
        }
    }

    /// Processes one batch: sample, label, refresh, route.
    pub fn step<O: Oracle + ?Sized>(
        &mut self,
        batch: &[ScoredRecord],
        oracle: &mut O,
    ) -> Result<StepOutcome> {
        if batch.is_empty() {
            return Err(CascadeError::InvalidInput("empty batch".into()));
        }
        if self.variant == SupgVariant::SinglePass {
            self.sample.clear();
        }

        let pool: Vec<usize> = (0..batch.len())
            .filter(|&i| !self.sample.contains(batch[i].id))
            .collect();
        let budget = ((self.config.rho * batch.len() as f64).floor() as usize).min(pool.len());
        let pool_scores: Vec<f64> = pool.iter().map(|&i| batch[i].proxy_score).collect();
        let draws = if budget > 0 {
            draw_importance_sample(&pool_scores, self.config.eta, budget, &mut self.rng)?
        } else {
            Vec::new()
        };

        let mut sampled_labels: Vec<Option<bool>> = vec![None; batch.len()];
        let mut refreshes = Vec::new();
        let mut collapsed = false;
        for chunk in draws.chunks(self.config.sub_batch) {
            for draw in chunk {
                let record = &batch[pool[draw.index]];
                let label = oracle.label(record)?;
                sampled_labels[pool[draw.index]] = Some(label);
                self.sample.push(
                    record.id,
                    LabeledObservation::new(record.proxy_score, label, draw.correction),
                )?;
            }
            collapsed |= self.refresh()?;
            refreshes.push(self.thresholds);
        }

        let fallback_tau = match self.config.residual {
            ResidualStrategy::FallbackThreshold if self.sample.weighted_positive_total() > 0.0 => {
                Some(f1_threshold(&self.sample)?)
            }
            ResidualStrategy::FallbackThreshold => Some(0.5),
            ResidualStrategy::DelegateAll => None,
        };

        let mut predictions = Vec::with_capacity(batch.len());
        for (record, sampled) in batch.iter().zip(&sampled_labels) {
            let decision = route(record.proxy_score, self.thresholds);
            let prediction = match (sampled, decision.predicted_label()) {
                (Some(label), _) => Prediction {
                    id: record.id,
                    decision,
                    label: *label,
                    oracle_called: true,
                },
                (None, Some(label)) => Prediction {
                    id: record.id,
                    decision,
                    label,
                    oracle_called: false,
                },
                (None, None) => match fallback_tau {
                    None => Prediction {
                        id: record.id,
                        decision,
                        label: oracle.label(record)?,
                        oracle_called: true,
                    },
                    Some(tau) => Prediction {
                        id: record.id,
                        decision,
                        label: record.proxy_score >= tau,
                        oracle_called: false,
                    },
                },
            };
            predictions.push(prediction);
        }

        Ok(StepOutcome {
            predictions,
            refreshes,
            collapsed,
            sampled: draws.len(),
        })
    }
}

/// Convenience wrappers matching the three algorithm names.
pub fn supg_it_step<O: Oracle + ?Sized>(
    state: &mut SupgState,
    batch: &[ScoredRecord],
    oracle: &mut O,
) -> Result<StepOutcome> {
    debug_assert_eq!(state.variant, SupgVariant::Iterative);
    state.step(batch, oracle)
}

pub fn supg_sp_step<O: Oracle + ?Sized>(
    state: &mut SupgState,
    batch: &[ScoredRecord],
    oracle: &mut O,
) -> Result<StepOutcome> {
    debug_assert_eq!(state.variant, SupgVariant::SinglePass);
    state.step(batch, oracle)
}

pub fn supg_base_step<O: Oracle + ?Sized>(
    state: &mut SupgState,
    batch: &[ScoredRecord],
    oracle: &mut O,
) -> Result<StepOutcome> {
    debug_assert_eq!(state.variant, SupgVariant::Base);
    state.step(batch, oracle)
}

#[cfg(test)]
mod tests;
