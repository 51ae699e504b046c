use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};

/// One data item: proxy confidence, hidden oracle label and a per-record
/// quantile fixed for the lifetime of the record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub id: u64,
    pub proxy_score: f64,
    pub oracle_label: bool,
    quantile: f64,
}

impl ScoredRecord {
    pub fn new(id: u64, proxy_score: f64, oracle_label: bool, quantile: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&proxy_score) {
            return Err(CascadeError::InvalidInput(format!(
                "record {id}: proxy score {proxy_score} outside [0, 1]"
            )));
        }
        if !(0.0..=1.0).contains(&quantile) {
            return Err(CascadeError::InvalidInput(format!(
                "record {id}: quantile {quantile} outside [0, 1]"
            )));
        }
        Ok(Self {
            id,
            proxy_score,
            oracle_label,
            quantile,
        })
    }

    pub fn quantile(&self) -> f64 {
        self.quantile
    }
}

/// `(low, high)` with `0 <= low <= high <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    low: f64,
    high: f64,
}

impl ThresholdPair {
    /// Everything uncertain: the cold-start configuration.
    pub const FULL: ThresholdPair = ThresholdPair {
        low: 0.0,
        high: 1.0,
    };

    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low > high {
            return Err(CascadeError::InvalidInput(format!(
                "thresholds must satisfy 0 <= low <= high <= 1, got ({low}, {high})"
            )));
        }
        Ok(Self { low, high })
    }

    /// Both thresholds at `tau`: no uncertain region.
    pub fn collapsed(tau: f64) -> Result<Self> {
        Self::new(tau, tau)
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

/// Region a score falls into. Ordered `Reject < Delegate < Accept`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Decision {
    Reject,
    Delegate,
    Accept,
}

/// Alias kept for call sites that talk about routing regions rather than decisions.
pub type RouteKind = Decision;

impl Decision {
    /// Label implied by the region; `None` when the oracle must decide.
    pub fn predicted_label(self) -> Option<bool> {
        match self {
            Decision::Reject => Some(false),
            Decision::Accept => Some(true),
            Decision::Delegate => None,
        }
    }
}

/// `score < low` rejects, `score >= high` accepts, anything else is delegated.
pub fn route(score: f64, thresholds: ThresholdPair) -> Decision {
    if score >= thresholds.high {
        Decision::Accept
    } else if score < thresholds.low {
        Decision::Reject
    } else {
        Decision::Delegate
    }
}

/// Final output for one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: u64,
    pub decision: Decision,
    pub label: bool,
    /// The oracle was consulted for this record, either as a sample or as a delegation.
    pub oracle_called: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityTargets {
    pub t_p: f64,
    pub t_r: f64,
    pub delta: f64,
}

impl QualityTargets {
    pub fn new(t_p: f64, t_r: f64, delta: f64) -> Result<Self> {
        if !(t_p > 0.0 && t_p <= 1.0) {
            return Err(CascadeError::InvalidInput(format!("t_p {t_p} outside (0, 1]")));
        }
        if !(t_r > 0.0 && t_r <= 1.0) {
            return Err(CascadeError::InvalidInput(format!("t_r {t_r} outside (0, 1]")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(CascadeError::InvalidDelta(delta));
        }
        Ok(Self { t_p, t_r, delta })
    }
}

/// Confusion counts; real-valued so expected counts fit too.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: f64,
    pub fp: f64,
    pub fn_: f64,
    pub tn: f64,
}

impl ConfusionCounts {
    pub fn new(tp: f64, fp: f64, fn_: f64, tn: f64) -> Self {
        debug_assert!(tp >= 0.0 && fp >= 0.0 && fn_ >= 0.0 && tn >= 0.0);
        Self { tp, fp, fn_, tn }
    }

    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1.0,
            (true, false) => self.fp += 1.0,
            (false, true) => self.fn_ += 1.0,
            (false, false) => self.tn += 1.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn predicted_positive(&self) -> f64 {
        self.tp + self.fp
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, rhs: Self) -> Self {
        Self {
            tp: self.tp + rhs.tp,
            fp: self.fp + rhs.fp,
            fn_: self.fn_ + rhs.fn_,
            tn: self.tn + rhs.tn,
        }
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub delegation_rate: f64,
}
