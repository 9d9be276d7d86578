use serde::{Deserialize, Serialize};

use crate::datagen::{dot, logistic};
use crate::error::{CascadeError, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

impl LogisticModel {
    /// Pre-sigmoid score.
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        logistic(self.score(x))
    }
}

/// Mean log-loss of a linear scorer, computed stably from the raw score.
pub fn log_loss(weights: &[f64], bias: f64, x: &FeatureMatrix, labels: &[u8]) -> f64 {
    let n = x.n_rows() as f64;
    x.rows()
        .zip(labels)
        .map(|(row, &l)| {
            let z = dot(weights, row) + bias;
            // log(1 + e^{-z}) for label 1, log(1 + e^{z}) for label 0
            let m = if l == 1 { -z } else { z };
            softplus(m)
        })
        .sum::<f64>()
        / n
}

fn softplus(m: f64) -> f64 {
    if m > 0.0 {
        m + (-m).exp().ln_1p()
    } else {
        m.exp().ln_1p()
    }
}

/// Full-batch gradient descent on the mean log-loss, starting from zero.
/// Stops once the gradient norm drops below `tolerance` or after `max_iters`.
pub fn fit_logistic(
    x: &FeatureMatrix,
    labels: &[u8],
    learning_rate: f64,
    max_iters: usize,
    tolerance: f64,
) -> Result<LogisticModel> {
    let (n, d) = (x.n_rows(), x.n_cols());
    if labels.len() != n {
        return Err(CascadeError::Argument(format!(
            "{} labels for {} rows",
            labels.len(),
            n
        )));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(CascadeError::Fit("labels must be 0 or 1".into()));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == n {
        return Err(CascadeError::Fit(
            "logistic regression needs both classes present".into(),
        ));
    }
    if learning_rate.is_nan() || learning_rate <= 0.0 || tolerance.is_nan() || tolerance <= 0.0 {
        return Err(CascadeError::config(
            "learning_rate",
            "learning_rate and tolerance must be positive",
        ));
    }
    let nf = n as f64;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut grad_w = vec![0.0; d];
    let mut iterations = 0;
    for it in 0..max_iters {
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for (row, &l) in x.rows().zip(labels) {
            let r = logistic(dot(&w, row) + b) - f64::from(l);
            for (g, v) in grad_w.iter_mut().zip(row) {
                *g += r * v;
            }
            grad_b += r;
        }
        grad_w.iter_mut().for_each(|g| *g /= nf);
        grad_b /= nf;
        let norm = (grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
        iterations = it;
        if norm < tolerance {
            break;
        }
        for (wi, g) in w.iter_mut().zip(&grad_w) {
            *wi -= learning_rate * g;
        }
        b -= learning_rate * grad_b;
        iterations = it + 1;
    }
    Ok(LogisticModel {
        weights: w,
        bias: b,
        iterations,
    })
}
