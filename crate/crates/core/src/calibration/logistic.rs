//! Ridge-penalized logistic regression toward a prior mean, fit by damped
//! Newton iterations, with the Laplace (inverse Hessian) covariance.

use nalgebra::{DMatrix, DVector};

use crate::error::{CascadeError, Result};

const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedFit {
    pub coefficients: DVector<f64>,
    /// Inverse Hessian of the penalized loss at the optimum.
    pub covariance: DMatrix<f64>,
    pub lambda: f64,
    pub prior_mean: DVector<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Negative log-likelihood plus `lambda / 2 * |theta - prior|^2`.
pub fn penalized_objective(
    x: &DMatrix<f64>,
    y: &[bool],
    lambda: f64,
    prior: &DVector<f64>,
    theta: &DVector<f64>,
) -> f64 {
    let eta = x * theta;
    let nll: f64 = eta
        .iter()
        .zip(y)
        .map(|(&e, &yi)| softplus(e) - if yi { e } else { 0.0 })
        .sum();
    nll + 0.5 * lambda * (theta - prior).norm_squared()
}

/// Analytic gradient `X^T (sigma(X theta) - y) + lambda (theta - prior)`.
pub fn penalized_gradient(
    x: &DMatrix<f64>,
    y: &[bool],
    lambda: f64,
    prior: &DVector<f64>,
    theta: &DVector<f64>,
) -> DVector<f64> {
    let eta = x * theta;
    let resid = DVector::from_iterator(
        y.len(),
        eta.iter()
            .zip(y)
            .map(|(&e, &yi)| sigmoid(e) - if yi { 1.0 } else { 0.0 }),
    );
    x.transpose() * resid + (theta - prior) * lambda
}

/// `X^T diag(h (1 - h)) X + lambda I`.
pub fn penalized_hessian(x: &DMatrix<f64>, lambda: f64, theta: &DVector<f64>) -> DMatrix<f64> {
    let eta = x * theta;
    let d = x.ncols();
    let mut h = DMatrix::identity(d, d) * lambda;
    for (i, e) in eta.iter().enumerate() {
        let p = sigmoid(*e);
        let w = p * (1.0 - p);
        if w == 0.0 {
            continue;
        }
        let row = x.row(i);
        for a in 0..d {
            let ra = row[a];
            if ra == 0.0 {
                continue;
            }
            for b in 0..d {
                h[(a, b)] += w * ra * row[b];
            }
        }
    }
    h
}

fn invert_spd(h: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = h.clone().cholesky()?.inverse();
    Some((&inv + inv.transpose()) * 0.5)
}

/// Minimizes the penalized negative log-likelihood.
///
/// Converged when the gradient norm drops below
/// `1e-6 * max(1, |gradient at the prior|)`.
pub fn fit_penalized_logistic(
    x: &DMatrix<f64>,
    y: &[bool],
    lambda: f64,
    prior: &[f64],
) -> Result<PenalizedFit> {
    let d = x.ncols();
    if x.nrows() != y.len() {
        return Err(CascadeError::InvalidInput(format!(
            "design has {} rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if prior.len() != d {
        return Err(CascadeError::InvalidInput(format!(
            "prior has length {} but design has {d} columns",
            prior.len()
        )));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(CascadeError::InvalidInput(format!("lambda {lambda} must be positive")));
    }
    let prior = DVector::from_column_slice(prior);
    let mut theta = prior.clone();
    let mut grad = penalized_gradient(x, y, lambda, &prior, &theta);
    let tolerance = 1e-6 * grad.norm().max(1.0);
    let mut objective = penalized_objective(x, y, lambda, &prior, &theta);
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        // push well past the acceptance tolerance; Newton converges quadratically here
        if grad.norm() <= tolerance * 1e-4 {
            break;
        }
        iterations += 1;
        let previous = objective;
        let hessian = penalized_hessian(x, lambda, &theta);
        let step = match hessian.clone().cholesky() {
            Some(chol) => chol.solve(&grad),
            None => grad.clone() / lambda,
        };
        let mut t = 1.0;
        let slope = grad.dot(&step);
        let mut accepted = false;
        for _ in 0..60 {
            let candidate = &theta - &step * t;
            let value = penalized_objective(x, y, lambda, &prior, &candidate);
            if value <= objective - 1e-4 * t * slope {
                theta = candidate;
                objective = value;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        grad = penalized_gradient(x, y, lambda, &prior, &theta);
        if !accepted {
            // no further decrease representable in floating point
            break;
        }
        // converged and the last step only moved the objective by rounding noise
        if grad.norm() <= tolerance && previous - objective <= 1e-14 * objective.abs().max(1.0) {
            break;
        }
    }

    let gradient_norm = grad.norm();
    if gradient_norm > tolerance || theta.iter().any(|v| !v.is_finite()) {
        return Err(CascadeError::FitDidNotConverge {
            iterations,
            gradient_norm,
            objective,
        });
    }
    let hessian = penalized_hessian(x, lambda, &theta);
    let covariance = invert_spd(&hessian).ok_or(CascadeError::FitDidNotConverge {
        iterations,
        gradient_norm,
        objective,
    })?;
    Ok(PenalizedFit {
        coefficients: theta,
        covariance,
        lambda,
        prior_mean: prior,
        iterations,
        gradient_norm,
    })
}
