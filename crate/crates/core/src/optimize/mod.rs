//! Expected-quality objective over calibrated scores and its global
//! minimization in the reparameterized unit square.

mod de;
mod expected;

pub use de::{differential_evolution, DEConfig, DEResult};
pub use expected::{
    baseline, expected_confusion, expected_fbeta, objective, reparameterize, ObjectiveLandscape,
};

use crate::error::Result;
use crate::types::ThresholdPair;

/// Optimized thresholds together with the objective value they reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizedThresholds {
    pub thresholds: ThresholdPair,
    pub value: f64,
}

/// Differential evolution over `objective . reparameterize`.
pub fn optimize_thresholds(
    scores: &[f64],
    alpha: f64,
    beta: f64,
    config: &DEConfig,
) -> Result<OptimizedThresholds> {
    let landscape = ObjectiveLandscape::new(scores, alpha, beta)?;
    optimize_landscape(&landscape, config)
}

pub fn optimize_landscape(
    landscape: &ObjectiveLandscape,
    config: &DEConfig,
) -> Result<OptimizedThresholds> {
    let best = differential_evolution(|y1, y2| landscape.value(reparameterize(y1, y2)), config)?;
    Ok(OptimizedThresholds {
        thresholds: reparameterize(best.y1, best.y2),
        value: best.value,
    })
}

/// Exhaustive minimum over all candidate pairs; O(n^2 log n).
pub fn grid_optimum(landscape: &ObjectiveLandscape) -> OptimizedThresholds {
    let candidates = landscape.candidates();
    let mut best = OptimizedThresholds {
        thresholds: baseline(),
        value: f64::INFINITY,
    };
    for (i, &low) in candidates.iter().enumerate() {
        for &high in &candidates[i..] {
            let t = ThresholdPair::new(low, high).expect("candidates are sorted in [0, 1]");
            let v = landscape.value(t);
            if v < best.value {
                best = OptimizedThresholds { thresholds: t, value: v };
            }
        }
    }
    best
}

#[cfg(test)]
mod tests;
