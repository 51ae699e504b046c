//! Probability calibration of proxy scores with pointwise uncertainty.
//!
//! The default model is a cubic B-spline in clipped log-odds, fit by ridge
//! penalized logistic regression toward a linearly spaced prior (which
//! reproduces an identity-like map when data is scarce). Its Laplace
//! covariance gives a standard error for the fitted log-odds at every score.
//! A bootstrap ensemble offers a distribution-free alternative.

mod bootstrap;
mod logistic;
mod spline;

pub use bootstrap::{bootstrap_stochastic_score, fit_bootstrap, BootstrapEnsemble};
pub use logistic::{
    fit_penalized_logistic, penalized_gradient, penalized_hessian, penalized_objective, sigmoid,
    PenalizedFit,
};
pub use spline::{platt_prior, SplineBasis};

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::Result;

/// Smallest/largest quantile fed to the normal quantile function.
pub const QUANTILE_CLAMP: f64 = 1e-9;

/// Standard normal quantile with `q` clamped into `[1e-9, 1 - 1e-9]`.
pub fn normal_quantile(q: f64) -> f64 {
    let q = q.clamp(QUANTILE_CLAMP, 1.0 - QUANTILE_CLAMP);
    Normal::standard().inverse_cdf(q)
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Anything that maps a raw score and a fixed per-record quantile to a
/// calibrated probability.
pub trait Calibrator: Send + Sync {
    fn calibrated(&self, score: f64, q: f64) -> f64;
}

/// Fitted spline calibration: `f(s) = phi(logit s)^T theta`, with
/// `se(s) = sqrt(phi^T Sigma phi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationModel {
    basis: SplineBasis,
    coefficients: DVector<f64>,
    covariance: DMatrix<f64>,
    lambda: f64,
    prior_mean: DVector<f64>,
}

impl CalibrationModel {
    /// Fits on `(score, label)` pairs with the basis' linear prior.
    pub fn fit(basis: &SplineBasis, scores: &[f64], labels: &[bool], lambda: f64) -> Result<Self> {
        let x = basis.design_matrix(scores);
        let fit = fit_penalized_logistic(&x, labels, lambda, &basis.platt_prior())?;
        Ok(Self::from_fit(basis.clone(), fit))
    }

    pub fn from_fit(basis: SplineBasis, fit: PenalizedFit) -> Self {
        Self {
            basis,
            coefficients: fit.coefficients,
            covariance: fit.covariance,
            lambda: fit.lambda,
            prior_mean: fit.prior_mean,
        }
    }

    /// Model with explicit parameters; mostly for tests and diagnostics.
    pub fn from_parts(basis: SplineBasis, coefficients: Vec<f64>, covariance: DMatrix<f64>) -> Self {
        let d = basis.dim();
        assert_eq!(coefficients.len(), d);
        assert_eq!(covariance.shape(), (d, d));
        let prior_mean = DVector::from_vec(basis.platt_prior());
        Self {
            basis,
            coefficients: DVector::from_vec(coefficients),
            covariance,
            lambda: 0.0,
            prior_mean,
        }
    }

    pub fn basis(&self) -> &SplineBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn prior_mean(&self) -> &DVector<f64> {
        &self.prior_mean
    }

    /// Fitted log-odds.
    pub fn mean_logit(&self, score: f64) -> f64 {
        let phi = self.basis.row(score);
        phi.iter().zip(self.coefficients.iter()).map(|(p, c)| p * c).sum()
    }

    /// Fitted log-odds and its standard error.
    pub fn predict_mean_se(&self, score: f64) -> (f64, f64) {
        let phi = DVector::from_vec(self.basis.row(score));
        let f = phi.dot(&self.coefficients);
        let var = (&self.covariance * &phi).dot(&phi);
        (f, var.max(0.0).sqrt())
    }

    /// Calibrated probability at the posterior mean.
    pub fn probability(&self, score: f64) -> f64 {
        sigmoid(self.mean_logit(score))
    }
}

/// `sigmoid(f(s) + Phi^-1(q) * se(s))`.
pub fn stochastic_score(model: &CalibrationModel, score: f64, q: f64) -> f64 {
    let (f, se) = model.predict_mean_se(score);
    if se == 0.0 {
        return sigmoid(f);
    }
    sigmoid(f + normal_quantile(q) * se)
}

impl Calibrator for CalibrationModel {
    fn calibrated(&self, score: f64, q: f64) -> f64 {
        stochastic_score(self, score, q)
    }
}

/// Two-parameter logistic `sigmoid(a + b s)` on raw scores; the reference
/// point for judging the spline calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlattModel {
    pub intercept: f64,
    pub slope: f64,
}

impl PlattModel {
    pub const LAMBDA: f64 = 1e-6;

    pub fn fit(scores: &[f64], labels: &[bool]) -> Result<Self> {
        let mut x = DMatrix::zeros(scores.len(), 2);
        for (i, &s) in scores.iter().enumerate() {
            x[(i, 0)] = 1.0;
            x[(i, 1)] = s;
        }
        let fit = fit_penalized_logistic(&x, labels, Self::LAMBDA, &[0.0, 0.0])?;
        Ok(Self {
            intercept: fit.coefficients[0],
            slope: fit.coefficients[1],
        })
    }

    pub fn probability(&self, score: f64) -> f64 {
        sigmoid(self.intercept + self.slope * score)
    }
}
