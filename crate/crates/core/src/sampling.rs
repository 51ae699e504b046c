//! Importance sampling with defensive mixing and inverse-probability
//! (Horvitz-Thompson) corrections.
//!
//! Weights are normalized over the current batch only, so a worker never
//! needs dataset-wide statistics.

use rand::Rng;

use crate::error::{CascadeError, Result};

/// One sampled record: its batch index, the weight it was drawn with, and
/// the correction `(1/m) / weight` that reweights it back to the uniform design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedDraw {
    pub index: usize,
    pub weight: f64,
    pub correction: f64,
}

/// `w_i = eta * sqrt(s_i) / sum_j sqrt(s_j) + (1 - eta) / m`.
///
/// When every score is zero the importance term degenerates to uniform.
pub fn mixing_weights(scores: &[f64], eta: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(CascadeError::InvalidInput("mixing weights of an empty batch".into()));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(CascadeError::InvalidInput(format!("eta {eta} outside [0, 1]")));
    }
    let m = scores.len() as f64;
    let roots: Vec<f64> = scores.iter().map(|s| s.max(0.0).sqrt()).collect();
    let total: f64 = roots.iter().sum();
    Ok(roots
        .iter()
        .map(|r| {
            let importance = if total > 0.0 { r / total } else { 1.0 / m };
            eta * importance + (1.0 - eta) / m
        })
        .collect())
}

/// Draws `k` distinct indices by repeated draw-and-renormalize over the
/// remaining weight mass.
pub fn weighted_sample_without_replacement<R: Rng + ?Sized>(
    weights: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let m = weights.len();
    if k > m {
        return Err(CascadeError::SampleTooLarge {
            requested: k,
            available: m,
        });
    }
    let mut remaining: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
    let mut mass: f64 = remaining.iter().sum();
    let mut taken = Vec::with_capacity(k);
    for _ in 0..k {
        let pick = if mass > 0.0 {
            let target = rng.random::<f64>() * mass;
            let mut acc = 0.0;
            let mut chosen = None;
            let mut last_live = None;
            for (i, &w) in remaining.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                last_live = Some(i);
                acc += w;
                if target < acc {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave `target` just past the accumulated mass
            chosen.or(last_live)
        } else {
            None
        };
        let index = match pick {
            Some(i) => i,
            None => {
                // all remaining mass is zero: fall back to the first untaken index
                (0..m)
                    .find(|i| !taken.contains(i))
                    .expect("k <= m leaves an untaken index")
            }
        };
        mass -= remaining[index];
        remaining[index] = 0.0;
        taken.push(index);
        if mass < 0.0 {
            mass = 0.0;
        }
    }
    Ok(taken)
}

/// `(1/m) / weight`.
pub fn ht_correction(weight: f64, m: usize) -> Result<f64> {
    if weight <= 0.0 {
        return Err(CascadeError::ZeroWeight);
    }
    if m == 0 {
        return Err(CascadeError::InvalidInput("batch size must be at least 1".into()));
    }
    Ok((1.0 / m as f64) / weight)
}

/// Weights, draw and corrections in one call.
pub fn draw_importance_sample<R: Rng + ?Sized>(
    scores: &[f64],
    eta: f64,
    k: usize,
    rng: &mut R,
) -> Result<Vec<WeightedDraw>> {
    let weights = mixing_weights(scores, eta)?;
    let m = scores.len();
    weighted_sample_without_replacement(&weights, k, rng)?
        .into_iter()
        .map(|index| {
            Ok(WeightedDraw {
                index,
                weight: weights[index],
                correction: ht_correction(weights[index], m)?,
            })
        })
        .collect()
}
