use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl RidgeModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        crate::datagen::dot(&self.weights, x) + self.intercept
    }
}

/// Closed-form ridge regression with an unpenalized intercept.
///
/// Solves `(Xc'Xc + penalty I) w = Xc'yc` on column-centered data and
/// recovers the intercept from the means.
pub fn fit_ridge(x: &FeatureMatrix, y: &[f64], penalty: f64) -> Result<RidgeModel> {
    let (n, d) = (x.n_rows(), x.n_cols());
    if y.len() != n {
        return Err(CascadeError::Argument(format!("{} targets for {} rows", y.len(), n)));
    }
    if n == 0 {
        return Err(CascadeError::Fit("ridge needs at least one row".into()));
    }
    if !(penalty >= 0.0 && penalty.is_finite()) {
        return Err(CascadeError::config("ridge_penalty", "must be finite and nonnegative"));
    }
    let nf = n as f64;
    let mut x_mean = vec![0.0; d];
    for row in x.rows() {
        for (m, v) in x_mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    x_mean.iter_mut().for_each(|m| *m /= nf);
    let y_mean = y.iter().sum::<f64>() / nf;

    let xc = DMatrix::from_fn(n, d, |i, j| x.row(i)[j] - x_mean[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let mut gram = xc.transpose() * &xc;
    for j in 0..d {
        gram[(j, j)] += penalty;
    }
    let rhs = xc.transpose() * yc;

    if penalty == 0.0 {
        let sv = gram.clone().singular_values();
        let max = sv.max();
        let tol = max * (d.max(1) as f64) * f64::EPSILON * 1e3;
        if d > 0 && (max == 0.0 || sv.min() <= tol) {
            return Err(CascadeError::Numerical(
                "singular normal equations; set learners.regressor.penalty > 0".into(),
            ));
        }
    }
    let w = if d == 0 {
        DVector::zeros(0)
    } else {
        gram.cholesky()
            .ok_or_else(|| {
                CascadeError::Numerical(
                    "normal equations not positive definite; set learners.regressor.penalty > 0".into(),
                )
            })?
            .solve(&rhs)
    };
    let weights: Vec<f64> = w.iter().copied().collect();
    let intercept = y_mean - crate::datagen::dot(&weights, &x_mean);
    Ok(RidgeModel { weights, intercept })
}
