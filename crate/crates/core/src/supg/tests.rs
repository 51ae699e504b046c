use super::*;
use crate::hash::uniform_open;
use crate::metrics::compute_metrics;
use crate::oracle::{FailingOracle, LabelLookup};
use crate::types::{ConfusionCounts, Decision};
use rand::{Rng, SeedableRng};
use rand_distr::{Beta, Distribution};
use std::collections::HashSet;

fn targets(t_p: f64, t_r: f64, delta: f64) -> QualityTargets {
    QualityTargets::new(t_p, t_r, delta).unwrap()
}

fn record(id: u64, score: f64, label: bool) -> ScoredRecord {
    ScoredRecord::new(id, score, label, uniform_open(0, id)).unwrap()
}

/// Records whose scores come from one of two Beta distributions by label.
fn beta_records(n: usize, pos_rate: f64, pos: (f64, f64), neg: (f64, f64), seed: u64) -> Vec<ScoredRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bp = Beta::new(pos.0, pos.1).unwrap();
    let bn = Beta::new(neg.0, neg.1).unwrap();
    (0..n as u64)
        .map(|id| {
            let label = rng.random::<f64>() < pos_rate;
            let s = if label { bp.sample(&mut rng) } else { bn.sample(&mut rng) };
            record(id, s, label)
        })
        .collect()
}

fn separable(n: usize, seed: u64) -> Vec<ScoredRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n as u64)
        .map(|id| {
            let label = rng.random::<f64>() < 0.3;
            let s = if label { rng.random_range(0.9..=1.0) } else { rng.random_range(0.0..=0.1) };
            record(id, s, label)
        })
        .collect()
}

fn batch_counts(batch: &[ScoredRecord], predictions: &[Prediction]) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for (r, p) in batch.iter().zip(predictions) {
        assert_eq!(r.id, p.id);
        c.record(p.label, r.oracle_label);
    }
    c
}

#[test]
fn full_budget_labels_everything() {
    let data = beta_records(300, 0.4, (3.0, 2.0), (2.0, 3.0), 1);
    let mut cfg = SupgConfig::new(targets(0.8, 0.8, 0.2));
    cfg.rho = 1.0;
    let mut state = SupgState::new(cfg, SupgVariant::Iterative, 5).unwrap();
    let mut oracle = LabelLookup::new();
    let out = state.step(&data, &mut oracle).unwrap();
    assert_eq!(out.sampled, data.len());
    assert_eq!(oracle.calls(), data.len() as u64);
    assert!(out.predictions.iter().all(|p| p.oracle_called));
    let m = compute_metrics(&batch_counts(&data, &out.predictions), 1.0);
    assert_eq!(m.f_beta, 1.0);
}

#[test]
fn separable_proxy_narrows_region() {
    let data = separable(5000, 2);
    let cfg = SupgConfig::new(targets(0.8, 0.8, 0.2));
    let mut state = SupgState::new(cfg, SupgVariant::Iterative, 6).unwrap();
    let mut oracle = LabelLookup::new();
    let mut last = None;
    for batch in data.chunks(500) {
        last = Some((batch, state.step(batch, &mut oracle).unwrap()));
    }
    let (batch, out) = last.unwrap();
    assert!(state.thresholds().width() < 0.8, "{:?}", state.thresholds());
    let m = compute_metrics(&batch_counts(batch, &out.predictions), 1.0);
    assert!(m.f_beta >= 0.95, "final batch F1 {}", m.f_beta);
}

#[test]
fn conflicting_targets_collapse() {
    let data = beta_records(2000, 0.5, (2.0, 2.0), (2.0, 2.2), 3);
    let cfg = SupgConfig::new(targets(0.3, 0.1, 0.2));
    let mut state = SupgState::new(cfg, SupgVariant::Iterative, 7).unwrap();
    let mut oracle = LabelLookup::new();
    let mut saw_collapse = false;
    for batch in data.chunks(500) {
        let out = state.step(batch, &mut oracle).unwrap();
        if out.collapsed {
            saw_collapse = true;
            assert_eq!(state.thresholds().width(), 0.0);
            let delegated = out
                .predictions
                .iter()
                .filter(|p| p.decision == Decision::Delegate)
                .count();
            assert_eq!(delegated, 0);
        }
    }
    assert!(saw_collapse);
}

#[test]
fn records_are_never_sampled_twice() {
    let data = beta_records(400, 0.4, (3.0, 2.0), (2.0, 3.0), 4);
    let mut cfg = SupgConfig::new(targets(0.8, 0.8, 0.2));
    cfg.rho = 0.5;
    let mut state = SupgState::new(cfg, SupgVariant::Iterative, 8).unwrap();
    // the same batch replayed: the second pass may only draw unsampled records
    let first = state.step(&data, &mut LabelLookup::new()).unwrap();
    let second = state.step(&data, &mut LabelLookup::new()).unwrap();
    assert_eq!(first.sampled + second.sampled, state.sample().len());
    let third = state.step(&data, &mut LabelLookup::new()).unwrap();
    assert_eq!(third.sampled, 0);
    assert_eq!(state.sample().len(), data.len());
}

#[test]
fn base_delegates_exactly_the_budget() {
    let data = beta_records(3000, 0.3, (4.0, 2.0), (2.0, 4.0), 5);
    let mut cfg = SupgConfig::new(targets(0.8, 0.9, 0.1));
    cfg.rho = 0.1;
    let mut state = SupgState::new(cfg, SupgVariant::Base, 9).unwrap();
    let mut oracle = LabelLookup::new();
    for batch in data.chunks(500) {
        let out = state.step(batch, &mut oracle).unwrap();
        let calls = out.predictions.iter().filter(|p| p.oracle_called).count();
        let d = calls as f64 / batch.len() as f64;
        assert!((d - 0.1).abs() <= 1.0 / batch.len() as f64, "delegation {d}");
        assert_eq!(state.thresholds().width(), 0.0);
    }
}

#[test]
fn base_with_full_recall_includes_every_sampled_positive() {
    let data = beta_records(1000, 0.3, (4.0, 2.0), (2.0, 4.0), 6);
    let mut cfg = SupgConfig::new(targets(0.8, 1.0, 0.1));
    cfg.rho = 0.2;
    let mut state = SupgState::new(cfg, SupgVariant::Base, 10).unwrap();
    state.step(&data, &mut LabelLookup::new()).unwrap();
    let min_pos = state
        .sample()
        .observations()
        .iter()
        .filter(|o| o.label)
        .map(|o| o.proxy_score)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(state.thresholds().low(), min_pos);
}

#[test]
fn single_batch_single_pass_matches_iterative() {
    let data = beta_records(600, 0.4, (3.0, 2.0), (2.0, 3.0), 7);
    let cfg = SupgConfig::new(targets(0.8, 0.8, 0.2));
    let mut it = SupgState::new(cfg, SupgVariant::Iterative, 11).unwrap();
    let mut sp = SupgState::new(cfg, SupgVariant::SinglePass, 11).unwrap();
    let a = supg_it_step(&mut it, &data, &mut LabelLookup::new()).unwrap();
    let b = supg_sp_step(&mut sp, &data, &mut LabelLookup::new()).unwrap();
    assert_eq!(a.predictions, b.predictions);
    assert_eq!(it.thresholds(), sp.thresholds());
}

#[test]
fn single_pass_forgets_previous_batches() {
    let data = beta_records(1000, 0.4, (3.0, 2.0), (2.0, 3.0), 8);
    let cfg = SupgConfig::new(targets(0.8, 0.8, 0.2));
    let mut sp = SupgState::new(cfg, SupgVariant::SinglePass, 12).unwrap();
    for batch in data.chunks(250) {
        let out = sp.step(batch, &mut LabelLookup::new()).unwrap();
        assert_eq!(sp.sample().len(), out.sampled);
    }
}

#[test]
fn sampled_predictions_carry_oracle_labels() {
    let data = beta_records(1000, 0.4, (2.0, 2.0), (2.0, 2.5), 9);
    let mut cfg = SupgConfig::new(targets(0.9, 0.9, 0.1));
    cfg.residual = ResidualStrategy::FallbackThreshold;
    let mut state = SupgState::new(cfg, SupgVariant::Iterative, 13).unwrap();
    let mut oracle = LabelLookup::new();
    let out = state.step(&data, &mut oracle).unwrap();
    let sampled: HashSet<u64> = out.predictions.iter().filter(|p| p.oracle_called).map(|p| p.id).collect();
    assert_eq!(sampled.len(), out.sampled);
    assert_eq!(oracle.calls(), out.sampled as u64);
    for (r, p) in data.iter().zip(&out.predictions) {
        if p.oracle_called {
            assert_eq!(p.label, r.oracle_label);
        }
    }
}

#[test]
fn oracle_failure_propagates() {
    let data = beta_records(50, 0.4, (3.0, 2.0), (2.0, 3.0), 10);
    let mut cfg = SupgConfig::new(targets(0.8, 0.8, 0.2));
    cfg.rho = 1.0;
    let mut state = SupgState::new(cfg, SupgVariant::Iterative, 14).unwrap();
    let err = state.step(&data, &mut FailingOracle { fail_on: 17 }).unwrap_err();
    assert!(matches!(err, CascadeError::OracleMissing(17)));
}

#[test]
fn empty_batch_is_rejected() {
    let cfg = SupgConfig::new(targets(0.8, 0.8, 0.2));
    let mut state = SupgState::new(cfg, SupgVariant::Iterative, 15).unwrap();
    assert!(state.step(&[], &mut LabelLookup::new()).is_err());
}

#[test]
fn invalid_config_is_rejected() {
    let mut cfg = SupgConfig::new(targets(0.8, 0.8, 0.2));
    cfg.rho = 0.0;
    assert!(SupgState::new(cfg, SupgVariant::Iterative, 0).is_err());
}
