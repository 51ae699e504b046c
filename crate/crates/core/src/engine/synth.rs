//! Synthetic proxy/oracle data.
//!
//! * Bimodal overlap: labels are Bernoulli(`positive_rate`); positive scores
//!   are Beta with mean `0.5 + 0.25 (1 - overlap)`, negative scores Beta with
//!   mean `0.5 - 0.25 (1 - overlap)`, both with concentration
//!   `a + b = 4 + 36 (1 - overlap)`. `overlap = 0` is nearly separable and
//!   `overlap = 1` makes both classes Beta(2, 2).
//! * S-shaped miscalibration: true probability `p ~ U(0, 1)`, label
//!   Bernoulli(`p`), reported score `sigmoid((1 + 3t) logit(p^(1 + t)))` for
//!   strength `t`; `t = 0` is perfectly calibrated.
//! * Extreme imbalance: the bimodal family at a small positive rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::calibration::{logit, sigmoid};
use crate::error::{CascadeError, Result};
use crate::hash::uniform_open;
use crate::types::ScoredRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    BimodalOverlap,
    SShapeMiscalibrated,
    ExtremeImbalance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n: usize,
    pub positive_rate: f64,
    pub overlap: f64,
    pub miscalibration_strength: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub const DEFAULT_STRENGTH: f64 = 0.35;
    pub const DEFAULT_IMBALANCE_RATE: f64 = 0.01;

    pub fn bimodal(n: usize, positive_rate: f64, overlap: f64, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::BimodalOverlap,
            n,
            positive_rate,
            overlap,
            miscalibration_strength: 0.0,
            seed,
        }
    }

    pub fn miscalibrated(n: usize, strength: f64, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::SShapeMiscalibrated,
            n,
            positive_rate: 0.5,
            overlap: 0.0,
            miscalibration_strength: strength,
            seed,
        }
    }

    pub fn imbalanced(n: usize, positive_rate: f64, overlap: f64, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::ExtremeImbalance,
            ..Self::bimodal(n, positive_rate, overlap, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CascadeError::InvalidInput("synthetic n must be at least 1".into()));
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return Err(CascadeError::InvalidInput(format!(
                "positive_rate {} outside (0, 1)",
                self.positive_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(CascadeError::InvalidInput(format!("overlap {} outside [0, 1]", self.overlap)));
        }
        if !(self.miscalibration_strength >= 0.0) {
            return Err(CascadeError::InvalidInput(format!(
                "miscalibration strength {} must be non-negative",
                self.miscalibration_strength
            )));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<Dataset> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match self.kind {
            SyntheticKind::BimodalOverlap | SyntheticKind::ExtremeImbalance => generate_bimodal(self, &mut rng),
            SyntheticKind::SShapeMiscalibrated => generate_miscalibrated(self, &mut rng),
        }
    }
}

/// Beta parameters `(a, b)` for one class of the bimodal family.
pub fn class_beta(positive: bool, overlap: f64) -> (f64, f64) {
    let shift = 0.25 * (1.0 - overlap);
    let mean = if positive { 0.5 + shift } else { 0.5 - shift };
    let kappa = 4.0 + 36.0 * (1.0 - overlap);
    (mean * kappa, (1.0 - mean) * kappa)
}

fn make(spec: &SyntheticSpec, id: usize, score: f64, label: bool) -> Result<ScoredRecord> {
    ScoredRecord::new(id as u64, score.clamp(0.0, 1.0), label, uniform_open(spec.seed, id as u64))
}

pub fn generate_bimodal<R: Rng>(spec: &SyntheticSpec, rng: &mut R) -> Result<Dataset> {
    let beta = |positive| {
        let (a, b) = class_beta(positive, spec.overlap);
        Beta::new(a, b).map_err(|e| CascadeError::InvalidInput(e.to_string()))
    };
    let (pos, neg) = (beta(true)?, beta(false)?);
    let records = (0..spec.n)
        .map(|id| {
            let label = rng.random::<f64>() < spec.positive_rate;
            let score = if label { pos.sample(rng) } else { neg.sample(rng) };
            make(spec, id, score, label)
        })
        .collect::<Result<Vec<_>>>()?;
    let name = match spec.kind {
        SyntheticKind::ExtremeImbalance => "imbalance",
        _ => "bimodal",
    };
    Dataset::new(name, records)
}

/// The S-shaped distortion; strictly increasing on `[0, 1]`.
pub fn s_distortion(p: f64, strength: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return p.clamp(0.0, 1.0);
    }
    sigmoid((1.0 + 3.0 * strength) * logit(p.powf(1.0 + strength)))
}

pub fn generate_miscalibrated<R: Rng>(spec: &SyntheticSpec, rng: &mut R) -> Result<Dataset> {
    let records = (0..spec.n)
        .map(|id| {
            let p: f64 = rng.random();
            let label = rng.random::<f64>() < p;
            make(spec, id, s_distortion(p, spec.miscalibration_strength), label)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new("miscalibrated", records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{compute_metrics, expected_calibration_error};
    use crate::types::ConfusionCounts;

    fn proxy_f1(d: &Dataset) -> f64 {
        let mut c = ConfusionCounts::default();
        for r in &d.records {
            c.record(r.proxy_score >= 0.5, r.oracle_label);
        }
        compute_metrics(&c, 1.0).f_beta
    }

    #[test]
    fn separable_when_no_overlap() {
        let d = SyntheticSpec::bimodal(10_000, 0.3, 0.0, 1).generate().unwrap();
        assert!(proxy_f1(&d) > 0.95);
        assert!((d.positive_rate() - 0.3).abs() < 0.02);
    }

    #[test]
    fn full_overlap_is_uninformative() {
        let d = SyntheticSpec::bimodal(20_000, 0.3, 1.0, 2).generate().unwrap();
        // scores carry no signal, so thresholding at 0.5 predicts positive at
        // random half the time: F1 = 2 * 0.3 * 0.5 / (0.3 + 0.5)
        let chance = 2.0 * 0.3 * 0.5 / 0.8;
        assert!((proxy_f1(&d) - chance).abs() < 0.02, "{}", proxy_f1(&d));
    }

    #[test]
    fn deterministic_per_seed() {
        let a = SyntheticSpec::bimodal(500, 0.4, 0.5, 3).generate().unwrap();
        let b = SyntheticSpec::bimodal(500, 0.4, 0.5, 3).generate().unwrap();
        let c = SyntheticSpec::bimodal(500, 0.4, 0.5, 4).generate().unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn identity_distortion_is_calibrated() {
        let d = SyntheticSpec::miscalibrated(10_000, 0.0, 5).generate().unwrap();
        assert!(expected_calibration_error(&d.scores(), &d.labels(), 10).unwrap() < 0.03);
    }

    #[test]
    fn default_strength_is_miscalibrated() {
        let d = SyntheticSpec::miscalibrated(3000, SyntheticSpec::DEFAULT_STRENGTH, 6)
            .generate()
            .unwrap();
        let ece = expected_calibration_error(&d.scores(), &d.labels(), 10).unwrap();
        assert!(ece >= 0.10, "raw ECE {ece}");
    }

    #[test]
    fn distortion_is_strictly_increasing() {
        for t in [0.0, 0.35, 1.0] {
            let mut prev = -1.0;
            for i in 0..=1000 {
                let v = s_distortion(i as f64 / 1000.0, t);
                assert!(v > prev || (i == 0));
                prev = v;
            }
        }
    }

    #[test]
    fn imbalance_rate() {
        let d = SyntheticSpec::imbalanced(50_000, 0.01, 0.3, 7).generate().unwrap();
        assert!((d.positive_rate() - 0.01).abs() < 0.003);
        assert_eq!(d.name, "imbalance");
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(SyntheticSpec::bimodal(0, 0.3, 0.5, 0).generate().is_err());
        assert!(SyntheticSpec::bimodal(10, 1.0, 0.5, 0).generate().is_err());
        assert!(SyntheticSpec::bimodal(10, 0.3, 1.5, 0).generate().is_err());
    }
}
