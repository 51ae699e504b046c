//! Expected confusion counts and the normalized cost/quality objective over
//! calibrated scores.

use crate::error::{CascadeError, Result};
use crate::types::{ConfusionCounts, ThresholdPair};

/// Closed-form expected counts when every calibrated score is the
/// probability its record is positive and the uncertain region is resolved
/// by the oracle.
pub fn expected_confusion(scores: &[f64], thresholds: ThresholdPair) -> ConfusionCounts {
    let (low, high) = (thresholds.low(), thresholds.high());
    let mut c = ConfusionCounts::default();
    for &g in scores {
        if g >= low {
            c.tp += g;
        } else {
            c.fn_ += g;
            c.tn += 1.0 - g;
        }
        if g >= high {
            c.fp += 1.0 - g;
        }
    }
    c
}

/// `(1 + b^2) TP / ((1 + b^2) TP + FN + b^2 FP)`, zero when `TP = 0`.
pub fn expected_fbeta(counts: &ConfusionCounts, beta: f64) -> f64 {
    if counts.tp <= 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    (1.0 + b2) * counts.tp / ((1.0 + b2) * counts.tp + counts.fn_ + b2 * counts.fp)
}

fn delegated_count(scores: &[f64], thresholds: ThresholdPair) -> usize {
    scores
        .iter()
        .filter(|&&g| g >= thresholds.low() && g < thresholds.high())
        .count()
}

/// `alpha * normalized error + (1 - alpha) * delegation rate`, where the
/// error `1 - E[F_beta]` is divided by its value at the no-delegation
/// baseline `(0.5, 0.5)`. A perfect baseline makes the error term zero.
pub fn objective(scores: &[f64], thresholds: ThresholdPair, alpha: f64, beta: f64) -> f64 {
    let base_error = 1.0 - expected_fbeta(&expected_confusion(scores, baseline()), beta);
    let error = 1.0 - expected_fbeta(&expected_confusion(scores, thresholds), beta);
    let normalized = if base_error > 0.0 { error / base_error } else { 0.0 };
    let delegation = delegated_count(scores, thresholds) as f64 / scores.len().max(1) as f64;
    alpha * normalized + (1.0 - alpha) * delegation
}

/// The no-delegation split at 0.5 used to normalize the error term.
pub fn baseline() -> ThresholdPair {
    ThresholdPair::collapsed(0.5).expect("0.5 is a valid threshold")
}

/// `low = y1`, `high = y1 + (1 - y1) * y2`; inputs are clamped to `[0, 1]`.
pub fn reparameterize(y1: f64, y2: f64) -> ThresholdPair {
    let y1 = y1.clamp(0.0, 1.0);
    let y2 = y2.clamp(0.0, 1.0);
    let high = (y1 + (1.0 - y1) * y2).clamp(y1, 1.0);
    ThresholdPair::new(y1, high).expect("reparameterized thresholds are ordered")
}

/// Sorted calibrated scores with prefix sums: O(log n) objective evaluation.
#[derive(Debug, Clone)]
pub struct ObjectiveLandscape {
    sorted: Vec<f64>,
    /// `pos[i]` = sum of the `i` smallest scores.
    pos: Vec<f64>,
    /// `neg[i]` = sum of `1 - g` over the `i` smallest scores.
    neg: Vec<f64>,
    alpha: f64,
    beta: f64,
    baseline_error: f64,
}

impl ObjectiveLandscape {
    pub fn new(scores: &[f64], alpha: f64, beta: f64) -> Result<Self> {
        if scores.is_empty() {
            return Err(CascadeError::InvalidInput("objective over no scores".into()));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(CascadeError::InvalidInput(format!("alpha {alpha} outside [0, 1]")));
        }
        if !(beta > 0.0) {
            return Err(CascadeError::InvalidInput(format!("beta {beta} must be positive")));
        }
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut pos = Vec::with_capacity(sorted.len() + 1);
        let mut neg = Vec::with_capacity(sorted.len() + 1);
        let (mut p, mut q) = (0.0, 0.0);
        pos.push(0.0);
        neg.push(0.0);
        for &g in &sorted {
            p += g;
            q += 1.0 - g;
            pos.push(p);
            neg.push(q);
        }
        let mut landscape = Self {
            sorted,
            pos,
            neg,
            alpha,
            beta,
            baseline_error: 0.0,
        };
        landscape.baseline_error = 1.0 - expected_fbeta(&landscape.confusion(baseline()), beta);
        Ok(landscape)
    }

    fn index(&self, t: f64) -> usize {
        self.sorted.partition_point(|&g| g < t)
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn confusion(&self, thresholds: ThresholdPair) -> ConfusionCounts {
        let n = self.sorted.len();
        let il = self.index(thresholds.low());
        let ih = self.index(thresholds.high());
        ConfusionCounts {
            tp: self.pos[n] - self.pos[il],
            fp: self.neg[n] - self.neg[ih],
            fn_: self.pos[il],
            tn: self.neg[il],
        }
    }

    pub fn delegation(&self, thresholds: ThresholdPair) -> f64 {
        let il = self.index(thresholds.low());
        let ih = self.index(thresholds.high());
        ih.saturating_sub(il) as f64 / self.sorted.len() as f64
    }

    pub fn expected_fbeta(&self, thresholds: ThresholdPair) -> f64 {
        expected_fbeta(&self.confusion(thresholds), self.beta)
    }

    pub fn value(&self, thresholds: ThresholdPair) -> f64 {
        let error = 1.0 - self.expected_fbeta(thresholds);
        let normalized = if self.baseline_error > 0.0 {
            error / self.baseline_error
        } else {
            0.0
        };
        self.alpha * normalized + (1.0 - self.alpha) * self.delegation(thresholds)
    }

    /// Distinct scores plus the 0 and 1 sentinels; every threshold region
    /// is reached by some candidate.
    pub fn candidates(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.sorted.len() + 2);
        c.push(0.0);
        c.extend(self.sorted.iter().copied().filter(|g| (0.0..=1.0).contains(g)));
        c.push(1.0);
        c.dedup();
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn tp(l: f64, h: f64) -> ThresholdPair {
        ThresholdPair::new(l, h).unwrap()
    }

    #[test]
    fn confusion_example() {
        let c = expected_confusion(&[0.2, 0.6, 0.9], tp(0.5, 0.8));
        assert_relative_eq!(c.tp, 1.5, epsilon = 1e-15);
        assert_relative_eq!(c.fp, 0.1, epsilon = 1e-15);
        assert_relative_eq!(c.fn_, 0.2, epsilon = 1e-15);
        assert_relative_eq!(c.tn, 0.8, epsilon = 1e-15);
        assert_relative_eq!(expected_fbeta(&c, 1.0), 3.0 / 3.3, epsilon = 1e-12);
    }

    #[test]
    fn full_uncertain_region() {
        let c = expected_confusion(&[0.2, 0.6, 1.0], ThresholdPair::FULL);
        assert_relative_eq!(c.tp, 1.8, epsilon = 1e-15);
        assert_eq!(c.fp, 0.0);
        assert_eq!(c.fn_, 0.0);
    }

    #[test]
    fn fbeta_edge_cases() {
        assert_eq!(expected_fbeta(&ConfusionCounts::new(0.0, 3.0, 2.0, 1.0), 1.0), 0.0);
        assert_eq!(expected_fbeta(&ConfusionCounts::new(2.5, 0.0, 0.0, 1.0), 2.0), 1.0);
    }

    #[test]
    fn objective_examples() {
        let scores = [0.1, 0.3, 0.45, 0.55, 0.7, 0.95];
        for alpha in [0.0, 0.35, 1.0] {
            assert_eq!(objective(&scores, baseline(), alpha, 1.0), alpha);
            assert_relative_eq!(objective(&scores, ThresholdPair::FULL, alpha, 1.0), 1.0 - alpha, epsilon = 1e-15);
        }
        // perfect proxy: the baseline has no expected error
        assert_eq!(objective(&[0.0, 1.0], tp(0.2, 0.7), 0.5, 1.0), 0.0);
    }

    #[test]
    fn reparameterize_examples() {
        assert_eq!(reparameterize(0.4, 0.0), tp(0.4, 0.4));
        assert_eq!(reparameterize(0.4, 1.0).high(), 1.0);
        let t = reparameterize(0.3, 0.5);
        assert_relative_eq!(t.low(), 0.3);
        assert_relative_eq!(t.high(), 0.65, epsilon = 1e-15);
    }

    #[test]
    fn landscape_agrees_with_direct_sums() {
        let scores = [0.05, 0.2, 0.2, 0.5, 0.61, 0.8, 0.99, 1.0];
        let land = ObjectiveLandscape::new(&scores, 0.4, 1.5).unwrap();
        for &l in &land.candidates() {
            for &h in land.candidates().iter().filter(|&&h| h >= l) {
                let t = tp(l, h);
                let a = land.confusion(t);
                let b = expected_confusion(&scores, t);
                assert_relative_eq!(a.tp, b.tp, epsilon = 1e-12);
                assert_relative_eq!(a.fp, b.fp, epsilon = 1e-12);
                assert_relative_eq!(a.fn_, b.fn_, epsilon = 1e-12);
                assert_relative_eq!(land.value(t), objective(&scores, t, 0.4, 1.5), epsilon = 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn counts_monotone_in_thresholds(scores in proptest::collection::vec(0.0..=1.0f64, 1..100),
                                         a in 0.0..=1.0f64, b in 0.0..=1.0f64, h in 0.0..=1.0f64) {
            let (l1, l2) = if a <= b { (a, b) } else { (b, a) };
            let hh = h.max(l2);
            let c1 = expected_confusion(&scores, tp(l1, hh));
            let c2 = expected_confusion(&scores, tp(l2, hh));
            prop_assert!(c2.tp <= c1.tp + 1e-12);
            prop_assert!(c2.fn_ >= c1.fn_ - 1e-12);
            let (h1, h2) = if a <= b { (a, b) } else { (b, a) };
            let f1 = expected_confusion(&scores, tp(0.0, h1));
            let f2 = expected_confusion(&scores, tp(0.0, h2));
            prop_assert!(f2.fp <= f1.fp + 1e-12);
        }

        #[test]
        fn reparameterize_is_ordered(y1 in 0.0..=1.0f64, y2 in 0.0..=1.0f64) {
            let t = reparameterize(y1, y2);
            prop_assert!(0.0 <= t.low() && t.low() <= t.high() && t.high() <= 1.0);
        }
    }
}
