//! Threshold estimators over an accumulated oracle sample.
//!
//! Candidate thresholds are the distinct observed proxy scores. Recall curves
//! are correction-weighted; precision curves use raw labels, since both
//! numerator and denominator range over the same records and the corrections
//! approximately cancel.

use super::sample::{AccumulatedSample, CurvePoint, ScoreCurve};
use crate::error::{CascadeError, Result};
use crate::metrics::f_beta;
use crate::types::QualityTargets;

fn check_bound_args(s: usize, sigma: f64, delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CascadeError::InvalidDelta(delta));
    }
    if s == 0 {
        return Err(CascadeError::InvalidInput("confidence bound over zero samples".into()));
    }
    if sigma < 0.0 {
        return Err(CascadeError::InvalidInput(format!("negative sigma {sigma}")));
    }
    Ok(())
}

fn half_width(sigma: f64, s: usize, delta: f64) -> f64 {
    sigma / (s as f64).sqrt() * (2.0 * (1.0 / delta).ln()).sqrt()
}

/// `mu + sigma / sqrt(s) * sqrt(2 ln(1/delta))`, unclamped.
pub fn ub(mu: f64, sigma: f64, s: usize, delta: f64) -> Result<f64> {
    check_bound_args(s, sigma, delta)?;
    Ok(mu + half_width(sigma, s, delta))
}

/// `mu - sigma / sqrt(s) * sqrt(2 ln(1/delta))`, unclamped.
pub fn lb(mu: f64, sigma: f64, s: usize, delta: f64) -> Result<f64> {
    check_bound_args(s, sigma, delta)?;
    Ok(mu - half_width(sigma, s, delta))
}

/// Correction-weighted share of positives scoring at least `tau`.
pub fn weighted_tpr(sample: &AccumulatedSample, tau: f64) -> Result<f64> {
    let total = sample.weighted_positive_total();
    if total <= 0.0 {
        return Err(CascadeError::NoPositiveSamples);
    }
    let above: f64 = sample
        .observations()
        .iter()
        .filter(|o| o.proxy_score >= tau)
        .map(|o| o.weighted_positive())
        .sum();
    Ok(above / total)
}

fn reaches(weighted: f64, total: f64, target: f64) -> bool {
    weighted >= target * total - 1e-12 * total
}

fn recall_threshold_on(curve: &ScoreCurve, target: f64) -> f64 {
    curve
        .points
        .iter()
        .find(|p| reaches(p.weighted_positives, curve.weighted_positive_total, target))
        .map_or(0.0, |p| p.score)
}

/// Largest candidate threshold whose weighted TPR reaches `target`; 0 when
/// no observed score qualifies.
pub fn recall_threshold(sample: &AccumulatedSample, target: f64) -> Result<f64> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(CascadeError::InvalidInput(format!(
            "recall target {target} outside (0, 1]"
        )));
    }
    let curve = sample.curve();
    if curve.weighted_positive_total <= 0.0 {
        return Err(CascadeError::NoPositiveSamples);
    }
    Ok(recall_threshold_on(&curve, target))
}

fn precision_threshold_on(curve: &ScoreCurve, t_p: f64, delta: f64) -> Result<f64> {
    let per_candidate = delta / curve.total as f64;
    let mut best: Option<f64> = None;
    for p in &curve.points {
        let mu = p.precision();
        let sigma = (mu * (1.0 - mu)).max(0.0).sqrt();
        let bound = lb(mu, sigma, p.count, per_candidate)?.clamp(0.0, 1.0);
        if bound >= t_p {
            best = Some(p.score);
        }
    }
    Ok(best.unwrap_or(1.0))
}

/// Smallest candidate threshold whose Bonferroni-corrected lower precision
/// bound reaches `t_p`; 1.0 (empty accept region) when none does.
pub fn precision_threshold(sample: &AccumulatedSample, t_p: f64, delta: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(CascadeError::EmptySample);
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CascadeError::InvalidDelta(delta));
    }
    precision_threshold_on(&sample.curve(), t_p, delta)
}

/// Population mean and standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.max(0.0).sqrt())
}

/// Recall target inflated for sampling uncertainty, then clipped to
/// `[t_r, min(t_r + clip_delta, 1)]`.
pub fn corrected_recall_target(
    sample: &AccumulatedSample,
    tau_low_hat: f64,
    targets: &QualityTargets,
    clip_delta: f64,
) -> Result<f64> {
    if sample.weighted_positive_total() <= 0.0 {
        return Err(CascadeError::NoPositiveSamples);
    }
    let t_r = targets.t_r;
    let ceiling = (t_r + clip_delta).min(1.0).max(t_r);
    let s = sample.len();
    let (above, below): (Vec<f64>, Vec<f64>) = sample
        .observations()
        .iter()
        .map(|o| {
            let z = o.weighted_positive();
            if o.proxy_score >= tau_low_hat {
                (z, 0.0)
            } else {
                (0.0, z)
            }
        })
        .unzip();
    let (mean_above, sd_above) = mean_std(&above);
    let (mean_below, sd_below) = mean_std(&below);
    let half = targets.delta / 2.0;
    let upper = ub(mean_above, sd_above, s, half)?;
    let lower = lb(mean_below, sd_below, s, half)?.max(0.0);
    let denom = upper + lower;
    if denom <= 0.0 {
        return Ok(ceiling);
    }
    Ok((upper / denom).clamp(t_r, ceiling))
}

fn balanced_threshold_on(curve: &ScoreCurve, ratio: f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for p in &curve.points {
        let precision = p.precision();
        if precision <= 0.0 {
            continue;
        }
        let gap = (curve.recall(p) / precision - ratio).abs();
        if best.is_none_or(|(_, g)| gap < g) {
            best = Some((p.score, gap));
        }
    }
    best.map(|(score, _)| score)
}

/// Single threshold whose recall/precision ratio best matches `t_r / t_p`.
/// Ties go to the larger threshold.
pub fn balanced_threshold(sample: &AccumulatedSample, targets: &QualityTargets) -> Result<f64> {
    if sample.is_empty() {
        return Err(CascadeError::EmptySample);
    }
    let curve = sample.curve();
    if curve.weighted_positive_total <= 0.0 {
        return Err(CascadeError::NoPositiveSamples);
    }
    balanced_threshold_on(&curve, targets.t_r / targets.t_p).ok_or(CascadeError::NoPositiveSamples)
}

fn f1_threshold_on(curve: &ScoreCurve) -> Option<f64> {
    let mut best: Option<&CurvePoint> = None;
    let mut best_f1 = f64::NEG_INFINITY;
    for p in &curve.points {
        let f1 = f_beta(p.precision(), curve.recall(p), 1.0);
        if f1 > best_f1 {
            best_f1 = f1;
            best = Some(p);
        }
    }
    best.map(|p| p.score)
}

/// Threshold maximizing sample F1 (raw precision, weighted recall). Used to
/// classify uncertain records without the oracle.
pub fn f1_threshold(sample: &AccumulatedSample) -> Result<f64> {
    let curve = sample.curve();
    if curve.weighted_positive_total <= 0.0 {
        return Err(CascadeError::NoPositiveSamples);
    }
    f1_threshold_on(&curve).ok_or(CascadeError::EmptySample)
}

/// Everything the two-threshold refresh needs, computed from one sort.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct JointEstimate {
    pub low: f64,
    pub high: f64,
    pub collapsed: bool,
}

pub(crate) fn joint_thresholds(
    sample: &AccumulatedSample,
    targets: &QualityTargets,
    clip_delta: f64,
) -> Result<JointEstimate> {
    let curve = sample.curve();
    if curve.weighted_positive_total <= 0.0 {
        return Err(CascadeError::NoPositiveSamples);
    }
    let tau_hat = recall_threshold_on(&curve, targets.t_r);
    let corrected = corrected_recall_target(sample, tau_hat, targets, clip_delta)?;
    let low = recall_threshold_on(&curve, corrected);
    let high = precision_threshold_on(&curve, targets.t_p, targets.delta)?;
    if high < low {
        let tau = balanced_threshold_on(&curve, targets.t_r / targets.t_p)
            .ok_or(CascadeError::NoPositiveSamples)?;
        return Ok(JointEstimate {
            low: tau,
            high: tau,
            collapsed: true,
        });
    }
    Ok(JointEstimate {
        low,
        high,
        collapsed: false,
    })
}
