use super::*;
use crate::types::{route, ConfusionCounts, Decision};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

/// Splits each record's probability mass over both label outcomes and books
/// each outcome by the region the record lands in.
fn enumerate(scores: &[f64], t: ThresholdPair) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for &g in scores {
        for (label, mass) in [(true, g), (false, 1.0 - g)] {
            match (route(g, t), label) {
                (Decision::Reject, true) => c.fn_ += mass,
                (Decision::Reject, false) => c.tn += mass,
                (Decision::Accept, true) | (Decision::Delegate, true) => c.tp += mass,
                (Decision::Accept, false) => c.fp += mass,
                (Decision::Delegate, false) => {}
            }
        }
    }
    c
}

pub(crate) fn bimodal_scores(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let pos = Beta::new(5.0, 2.0).unwrap();
    let neg = Beta::new(2.0, 5.0).unwrap();
    (0..n)
        .map(|_| if rng.random::<f64>() < 0.4 { pos.sample(rng) } else { neg.sample(rng) })
        .collect()
}

#[test]
fn closed_form_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let n = rng.random_range(1..=500);
        let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        let t = ThresholdPair::new(a.min(b), a.max(b)).unwrap();
        let fast = expected_confusion(&scores, t);
        let slow = enumerate(&scores, t);
        assert!((fast.tp - slow.tp).abs() <= 1e-12);
        assert!((fast.fp - slow.fp).abs() <= 1e-12);
        assert!((fast.fn_ - slow.fn_).abs() <= 1e-12);
        assert!((fast.tn - slow.tn).abs() <= 1e-12);
    }
}

#[test]
fn de_reaches_grid_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for k in 0..20 {
        let scores = bimodal_scores(200, &mut rng);
        let alpha = rng.random_range(0.1..0.9);
        let land = ObjectiveLandscape::new(&scores, alpha, 1.0).unwrap();
        let cfg = DEConfig { seed: k, ..DEConfig::default() };
        let de = optimize_landscape(&land, &cfg).unwrap();
        let grid = grid_optimum(&land);
        assert!(de.value <= grid.value + 1e-9, "instance {k}: de {} grid {}", de.value, grid.value);
    }
}

#[test]
fn cost_only_never_delegates() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let scores = bimodal_scores(300, &mut rng);
    let best = optimize_thresholds(&scores, 0.0, 1.0, &DEConfig::default()).unwrap();
    assert_eq!(best.value, 0.0);
    let land = ObjectiveLandscape::new(&scores, 0.0, 1.0).unwrap();
    assert_eq!(land.delegation(best.thresholds), 0.0);
}

#[test]
fn quality_only_matches_grid_fbeta() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let scores = bimodal_scores(200, &mut rng);
    let land = ObjectiveLandscape::new(&scores, 1.0, 1.0).unwrap();
    let best = optimize_landscape(&land, &DEConfig::default()).unwrap();
    let grid = grid_optimum(&land);
    assert!((land.expected_fbeta(best.thresholds) - land.expected_fbeta(grid.thresholds)).abs() < 1e-12);
    assert!(best.thresholds.width() > 0.3, "{:?}", best.thresholds);
}
