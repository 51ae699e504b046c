use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};

/// Uniform B-spline basis over clipped log-odds.
///
/// `n_knots` equally spaced knots span `[logit_min, logit_max]`; the knot
/// vector is extended by `degree` knots on each side at the same spacing, so
/// every point of the clipped range is covered by exactly `degree + 1`
/// basis functions that sum to one. The basis has `n_knots + degree - 1`
/// functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis {
    degree: usize,
    knots: Vec<f64>,
    logit_clip: (f64, f64),
}

impl SplineBasis {
    pub const DEFAULT_KNOTS: usize = 10;
    pub const DEFAULT_DEGREE: usize = 3;
    pub const DEFAULT_CLIP: (f64, f64) = (-6.0, 6.0);

    pub fn uniform(n_knots: usize, degree: usize, logit_clip: (f64, f64)) -> Result<Self> {
        let (lo, hi) = logit_clip;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(CascadeError::InvalidInput(format!(
                "logit clip range ({lo}, {hi}) must be finite and increasing"
            )));
        }
        if n_knots < 2 {
            return Err(CascadeError::InvalidInput("need at least two knots".into()));
        }
        if degree == 0 {
            return Err(CascadeError::InvalidInput("spline degree must be positive".into()));
        }
        let h = (hi - lo) / (n_knots - 1) as f64;
        let knots = (0..n_knots + 2 * degree)
            .map(|i| lo + (i as f64 - degree as f64) * h)
            .collect();
        Ok(Self {
            degree,
            knots,
            logit_clip,
        })
    }

    pub fn default_cubic() -> Self {
        Self::uniform(Self::DEFAULT_KNOTS, Self::DEFAULT_DEGREE, Self::DEFAULT_CLIP)
            .expect("default basis parameters are valid")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Full (extended) knot vector.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn logit_clip(&self) -> (f64, f64) {
        self.logit_clip
    }

    pub fn dim(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Clipped log-odds of a score.
    pub fn transform(&self, score: f64) -> f64 {
        let (lo, hi) = self.logit_clip;
        let l = (score / (1.0 - score)).ln();
        if l.is_nan() {
            // only reachable for NaN input
            return lo;
        }
        l.clamp(lo, hi)
    }

    /// Index of the first nonzero basis function and the `degree + 1`
    /// nonzero values at clipped log-odds `x`.
    fn nonzero(&self, x: f64) -> (usize, Vec<f64>) {
        let p = self.degree;
        let t = &self.knots;
        let intervals = self.dim() - p;
        // knot span j with t[j] <= x < t[j+1], restricted to the clipped range
        let h = t[p + 1] - t[p];
        let mut j = p + (((x - t[p]) / h).floor().max(0.0) as usize).min(intervals - 1);
        while j > p && x < t[j] {
            j -= 1;
        }
        while j < p + intervals - 1 && x >= t[j + 1] {
            j += 1;
        }
        let mut n = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        n[0] = 1.0;
        for k in 1..=p {
            left[k] = x - t[j + 1 - k];
            right[k] = t[j + k] - x;
            let mut saved = 0.0;
            for r in 0..k {
                let temp = n[r] / (right[r + 1] + left[k - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[k - r] * temp;
            }
            n[k] = saved;
        }
        (j - p, n)
    }

    /// Dense basis vector `phi(score)`.
    pub fn row(&self, score: f64) -> Vec<f64> {
        let mut row = vec![0.0; self.dim()];
        let (start, values) = self.nonzero(self.transform(score));
        row[start..start + values.len()].copy_from_slice(&values);
        row
    }

    /// `n x d` design matrix, one row per score.
    pub fn design_matrix(&self, scores: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut x = DMatrix::zeros(scores.len(), d);
        for (i, &s) in scores.iter().enumerate() {
            let (start, values) = self.nonzero(self.transform(s));
            for (k, v) in values.into_iter().enumerate() {
                x[(i, start + k)] = v;
            }
        }
        x
    }

    /// Linearly spaced coefficients pulling the fit toward the identity in
    /// log-odds space.
    pub fn platt_prior(&self) -> Vec<f64> {
        platt_prior(self.logit_clip, self.dim())
    }
}

/// `mu_j = l_min + (l_max - l_min) * j / d` for `j = 1..=d`.
pub fn platt_prior(logit_clip: (f64, f64), d: usize) -> Vec<f64> {
    let (lo, hi) = logit_clip;
    (1..=d).map(|j| lo + (hi - lo) * j as f64 / d as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Plain recursive Cox-de Boor evaluation, used as an independent check.
    fn cox_de_boor(t: &[f64], i: usize, p: usize, x: f64) -> f64 {
        if p == 0 {
            return if t[i] <= x && x < t[i + 1] { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = t[i + p] - t[i];
        if d1 > 0.0 {
            v += (x - t[i]) / d1 * cox_de_boor(t, i, p - 1, x);
        }
        let d2 = t[i + p + 1] - t[i + 1];
        if d2 > 0.0 {
            v += (t[i + p + 1] - x) / d2 * cox_de_boor(t, i + 1, p - 1, x);
        }
        v
    }

    #[test]
    fn dimension() {
        assert_eq!(SplineBasis::default_cubic().dim(), 12);
        assert_eq!(SplineBasis::uniform(11, 3, (-6.0, 6.0)).unwrap().dim(), 13);
    }

    #[test]
    fn invalid_bases() {
        assert!(SplineBasis::uniform(10, 3, (1.0, 1.0)).is_err());
        assert!(SplineBasis::uniform(1, 3, (-1.0, 1.0)).is_err());
        assert!(SplineBasis::uniform(10, 0, (-1.0, 1.0)).is_err());
    }

    #[test]
    fn knots_strictly_increasing() {
        let b = SplineBasis::default_cubic();
        assert!(b.knots().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn matches_recursive_definition() {
        let b = SplineBasis::default_cubic();
        for k in 0..=200 {
            let x = -6.0 + 12.0 * k as f64 / 200.0;
            let s = 1.0 / (1.0 + (-x).exp());
            let row = b.row(s);
            let x = b.transform(s);
            for (i, v) in row.iter().enumerate() {
                assert_relative_eq!(*v, cox_de_boor(b.knots(), i, 3, x), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn clipping_at_extremes() {
        let b = SplineBasis::default_cubic();
        assert_eq!(b.transform(0.0), -6.0);
        assert_eq!(b.transform(1.0), 6.0);
        assert_eq!(b.row(0.0), b.row(1e-12));
        let top = b.row(1.0);
        assert_relative_eq!(top.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn local_support_on_grid() {
        let b = SplineBasis::default_cubic();
        let scores: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let x = b.design_matrix(&scores);
        for r in 0..x.nrows() {
            let row = x.row(r);
            assert!(row.iter().all(|v| *v >= 0.0));
            assert!(row.iter().filter(|v| **v != 0.0).count() <= 4);
        }
    }

    #[test]
    fn prior_examples() {
        assert_eq!(platt_prior((-4.0, 4.0), 1), vec![4.0]);
        assert_eq!(platt_prior((-4.0, 4.0), 2), vec![0.0, 4.0]);
    }

    #[test]
    fn prior_curve_is_increasing() {
        let b = SplineBasis::default_cubic();
        let mu = b.platt_prior();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=500 {
            let s = i as f64 / 500.0;
            let f: f64 = b.row(s).iter().zip(&mu).map(|(p, m)| p * m).sum();
            assert!(f >= prev - 1e-12);
            prev = f;
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(s in 0.0..=1.0f64) {
            let row = SplineBasis::default_cubic().row(s);
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}
