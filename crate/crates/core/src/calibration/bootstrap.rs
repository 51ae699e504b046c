use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sigmoid, CalibrationModel, Calibrator, SplineBasis};
use crate::error::{CascadeError, Result};

/// Primary model plus `B` models fit on with-replacement resamples.
#[derive(Debug, Clone)]
pub struct BootstrapEnsemble {
    pub primary: CalibrationModel,
    pub members: Vec<CalibrationModel>,
}

impl BootstrapEnsemble {
    /// Member log-odds minus their mean, at one score.
    pub fn deviations(&self, score: f64) -> Vec<f64> {
        let logits: Vec<f64> = self.members.iter().map(|m| m.mean_logit(score)).collect();
        let mean = logits.iter().sum::<f64>() / logits.len() as f64;
        logits.into_iter().map(|l| l - mean).collect()
    }

    /// Max minus min member log-odds at one score.
    pub fn spread(&self, score: f64) -> f64 {
        let dev = self.deviations(score);
        let max = dev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = dev.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Fits the primary model on the full data and `members` models on
/// resamples. Each member gets its own seed drawn up front, so the result
/// depends only on `rng`'s state, not on fitting order.
pub fn fit_bootstrap<R: Rng + ?Sized>(
    scores: &[f64],
    labels: &[bool],
    members: usize,
    lambda: f64,
    basis: &SplineBasis,
    rng: &mut R,
) -> Result<BootstrapEnsemble> {
    if members == 0 {
        return Err(CascadeError::InvalidInput("bootstrap needs at least one member".into()));
    }
    if scores.is_empty() {
        return Err(CascadeError::EmptySample);
    }
    let primary = CalibrationModel::fit(basis, scores, labels, lambda)?;
    let seeds: Vec<u64> = (0..members).map(|_| rng.random()).collect();
    let n = scores.len();
    let members = seeds
        .into_iter()
        .map(|seed| {
            let mut member_rng = ChaCha8Rng::seed_from_u64(seed);
            let idx: Vec<usize> = (0..n).map(|_| member_rng.random_range(0..n)).collect();
            let s: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
            let y: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
            CalibrationModel::fit(basis, &s, &y, lambda)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BootstrapEnsemble { primary, members })
}

/// Empirical quantile with linear interpolation between order statistics.
pub(crate) fn empirical_quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `sigmoid(primary log-odds + Q_q(member deviations))`.
pub fn bootstrap_stochastic_score(ensemble: &BootstrapEnsemble, score: f64, q: f64) -> f64 {
    let base = ensemble.primary.mean_logit(score);
    sigmoid(base + empirical_quantile(&ensemble.deviations(score), q))
}

impl Calibrator for BootstrapEnsemble {
    fn calibrated(&self, score: f64, q: f64) -> f64 {
        bootstrap_stochastic_score(self, score, q)
    }
}
