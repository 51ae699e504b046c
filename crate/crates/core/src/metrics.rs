//! Precision / recall / F-beta, delegation rate and expected calibration error.

use crate::error::{CascadeError, Result};
use crate::types::{ConfusionCounts, Decision, Metrics};

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// F-beta from precision and recall; zero when both are zero.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    ratio((1.0 + b2) * precision * recall, b2 * precision + recall)
}

/// Precision, recall and F-beta from confusion counts. `delegation_rate` is
/// left at zero; the caller fills it from routing information.
pub fn compute_metrics(counts: &ConfusionCounts, beta: f64) -> Metrics {
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    Metrics {
        precision,
        recall,
        f_beta: f_beta(precision, recall, beta),
        delegation_rate: 0.0,
    }
}

pub fn delegation_rate(decisions: &[Decision]) -> Result<f64> {
    if decisions.is_empty() {
        return Err(CascadeError::InvalidInput(
            "delegation rate of an empty decision sequence".into(),
        ));
    }
    let delegated = decisions.iter().filter(|d| **d == Decision::Delegate).count();
    Ok(delegated as f64 / decisions.len() as f64)
}

/// Equal-width binned ECE over `[0, 1]`. A score of exactly 1 falls in the last bin.
pub fn expected_calibration_error(scores: &[f64], labels: &[bool], bins: usize) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(CascadeError::InvalidInput(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if bins == 0 {
        return Err(CascadeError::InvalidInput("ECE needs at least one bin".into()));
    }
    if scores.is_empty() {
        return Ok(0.0);
    }
    let mut count = vec![0usize; bins];
    let mut score_sum = vec![0.0; bins];
    let mut label_sum = vec![0.0; bins];
    for (&s, &y) in scores.iter().zip(labels) {
        let b = ((s * bins as f64) as usize).min(bins - 1);
        count[b] += 1;
        score_sum[b] += s;
        label_sum[b] += if y { 1.0 } else { 0.0 };
    }
    let n = scores.len() as f64;
    Ok((0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let nb = count[b] as f64;
            nb / n * (score_sum[b] / nb - label_sum[b] / nb).abs()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn counts(tp: f64, fp: f64, fn_: f64) -> ConfusionCounts {
        ConfusionCounts::new(tp, fp, fn_, 0.0)
    }

    #[test]
    fn metrics_examples() {
        let m = compute_metrics(&counts(1.0, 0.0, 0.0), 1.0);
        assert_eq!((m.precision, m.recall, m.f_beta), (1.0, 1.0, 1.0));

        let m = compute_metrics(&counts(3.0, 1.0, 2.0), 1.0);
        assert_relative_eq!(m.precision, 0.75, epsilon = 1e-15);
        assert_relative_eq!(m.recall, 0.6, epsilon = 1e-15);
        assert_relative_eq!(m.f_beta, 2.0 / 3.0, epsilon = 1e-15);

        let m = compute_metrics(&counts(0.0, 5.0, 5.0), 1.0);
        assert_eq!((m.precision, m.recall, m.f_beta), (0.0, 0.0, 0.0));

        let m = compute_metrics(&ConfusionCounts::default(), 2.0);
        assert_eq!(m.f_beta, 0.0);
    }

    #[test]
    fn f_beta_weights_recall() {
        // P = 0.5, R = 1.0: F2 = 5 * 0.5 / (4 * 0.5 + 1) = 5/6
        assert_relative_eq!(f_beta(0.5, 1.0, 2.0), 5.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn delegation_rate_examples() {
        use Decision::*;
        assert_eq!(delegation_rate(&[Delegate; 4]).unwrap(), 1.0);
        assert_eq!(delegation_rate(&[Accept; 4]).unwrap(), 0.0);
        let d = [Delegate, Accept, Reject, Accept, Delegate, Reject, Reject, Accept];
        assert_eq!(delegation_rate(&d).unwrap(), 0.25);
        assert!(delegation_rate(&[]).is_err());
    }

    #[test]
    fn ece_examples() {
        let e = expected_calibration_error(&[0.5, 0.5], &[true, false], 10).unwrap();
        assert_eq!(e, 0.0);
        let e = expected_calibration_error(&[0.9, 0.9], &[false, false], 1).unwrap();
        assert_relative_eq!(e, 0.9, epsilon = 1e-15);
        assert!(expected_calibration_error(&[0.1], &[], 10).is_err());
        assert!(expected_calibration_error(&[0.1], &[true], 0).is_err());
    }

    fn bernoulli_ece(n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<bool> = scores.iter().map(|&s| rng.random::<f64>() < s).collect();
        expected_calibration_error(&scores, &labels, 10).unwrap()
    }

    #[test]
    fn calibrated_draw_has_small_ece() {
        assert!(bernoulli_ece(10_000, 1) < 0.03);
        assert!(bernoulli_ece(100_000, 2) < 0.01);
    }

    proptest! {
        #[test]
        fn f1_symmetric_in_fp_fn(tp in 0.0..100.0f64, fp in 0.0..100.0f64, fn_ in 0.0..100.0f64) {
            let a = compute_metrics(&counts(tp, fp, fn_), 1.0);
            let b = compute_metrics(&counts(tp, fn_, fp), 1.0);
            prop_assert!((a.precision - b.recall).abs() < 1e-12);
            prop_assert!((a.recall - b.precision).abs() < 1e-12);
            prop_assert!((a.f_beta - b.f_beta).abs() < 1e-12);
        }

        #[test]
        fn metrics_scale_free(tp in 0.0..100.0f64, fp in 0.0..100.0f64, fn_ in 0.0..100.0f64,
                              k in 0.01..1000.0f64, beta in 0.1..4.0f64) {
            let a = compute_metrics(&counts(tp, fp, fn_), beta);
            let b = compute_metrics(&counts(k * tp, k * fp, k * fn_), beta);
            prop_assert!((a.precision - b.precision).abs() < 1e-9);
            prop_assert!((a.recall - b.recall).abs() < 1e-9);
            prop_assert!((a.f_beta - b.f_beta).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&a.f_beta));
        }
    }
}
