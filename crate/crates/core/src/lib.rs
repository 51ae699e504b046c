//! Streaming proxy/oracle model cascades.
//!
//! Records carry a cheap proxy score; an expensive oracle supplies ground-truth
//! labels on demand. Two thresholds split the score range into reject,
//! uncertain (delegate to oracle) and accept regions. This crate provides the
//! statistical target-based cascade (`supg`), the calibration-based
//! cost/quality cascade (`gamcal`), the calibration and optimization machinery
//! they rely on, and a streaming engine that runs them over partitioned data.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod gamcal;
pub mod hash;
pub mod metrics;
pub mod optimize;
pub mod oracle;
pub mod sampling;
pub mod supg;
pub mod types;

pub mod engine;

pub use error::{CascadeError, Result};
pub use metrics::{compute_metrics, delegation_rate, expected_calibration_error};
pub use types::{
    route, ConfusionCounts, Decision, Metrics, Prediction, QualityTargets, RouteKind, ScoredRecord,
    ThresholdPair,
};
