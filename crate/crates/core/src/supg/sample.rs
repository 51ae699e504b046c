use std::collections::BTreeSet;

use crate::error::{CascadeError, Result};

/// An oracle-labeled record together with its inverse-probability correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledObservation {
    pub proxy_score: f64,
    pub label: bool,
    pub correction: f64,
}

impl LabeledObservation {
    pub fn new(proxy_score: f64, label: bool, correction: f64) -> Self {
        debug_assert!(correction > 0.0);
        Self {
            proxy_score,
            label,
            correction,
        }
    }

    pub(crate) fn weighted_positive(&self) -> f64 {
        if self.label {
            self.correction
        } else {
            0.0
        }
    }
}

/// Evidence accumulated across batches. A record id is admitted at most once.
#[derive(Debug, Clone, Default)]
pub struct AccumulatedSample {
    observations: Vec<LabeledObservation>,
    sampled_ids: BTreeSet<u64>,
}

impl AccumulatedSample {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a sample from bare observations with synthetic ids `0..n`.
    pub fn from_observations(observations: impl IntoIterator<Item = LabeledObservation>) -> Self {
        let mut sample = Self::new();
        for (i, obs) in observations.into_iter().enumerate() {
            sample.push(i as u64, obs).expect("synthetic ids are distinct");
        }
        sample
    }

    pub fn push(&mut self, id: u64, obs: LabeledObservation) -> Result<()> {
        if !self.sampled_ids.insert(id) {
            return Err(CascadeError::InvalidInput(format!(
                "record {id} sampled twice"
            )));
        }
        self.observations.push(obs);
        Ok(())
    }

    pub fn contains(&self, id: u64) -> bool {
        self.sampled_ids.contains(&id)
    }

    pub fn observations(&self) -> &[LabeledObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.observations.iter().filter(|o| o.label).count()
    }

    pub fn weighted_positive_total(&self) -> f64 {
        self.observations.iter().map(|o| o.weighted_positive()).sum()
    }

    pub fn clear(&mut self) {
        self.observations.clear();
        self.sampled_ids.clear();
    }

    pub(crate) fn curve(&self) -> ScoreCurve {
        ScoreCurve::build(&self.observations)
    }
}

/// Cumulative statistics at each distinct observed score, highest score first.
/// Entry `k` aggregates every observation with score `>= points[k].score`.
#[derive(Debug, Clone)]
pub(crate) struct ScoreCurve {
    pub points: Vec<CurvePoint>,
    pub total: usize,
    pub weighted_positive_total: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CurvePoint {
    pub score: f64,
    pub count: usize,
    pub positives: usize,
    pub weighted_positives: f64,
}

impl CurvePoint {
    /// Uncorrected positive fraction above the threshold.
    pub fn precision(&self) -> f64 {
        self.positives as f64 / self.count as f64
    }
}

impl ScoreCurve {
    fn build(observations: &[LabeledObservation]) -> Self {
        let mut sorted: Vec<&LabeledObservation> = observations.iter().collect();
        sorted.sort_by(|a, b| b.proxy_score.total_cmp(&a.proxy_score));
        let mut points: Vec<CurvePoint> = Vec::new();
        let (mut count, mut positives, mut weighted) = (0usize, 0usize, 0.0f64);
        for obs in sorted {
            count += 1;
            if obs.label {
                positives += 1;
            }
            weighted += obs.weighted_positive();
            let point = CurvePoint {
                score: obs.proxy_score,
                count,
                positives,
                weighted_positives: weighted,
            };
            match points.last_mut() {
                Some(last) if last.score == obs.proxy_score => *last = point,
                _ => points.push(point),
            }
        }
        Self {
            points,
            total: count,
            weighted_positive_total: weighted,
        }
    }

    pub fn recall(&self, point: &CurvePoint) -> f64 {
        point.weighted_positives / self.weighted_positive_total
    }
}
