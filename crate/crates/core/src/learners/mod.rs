//! Built-in Stage-1 classifiers and Stage-2 regressors, plus ingestion of
//! externally computed predictions.

mod knn;
mod logistic;
mod ridge;
mod table;

pub use knn::{fit_knn, KnnModel};
pub use logistic::{fit_logistic, log_loss, LogisticModel};
pub use ridge::{fit_ridge, RidgeModel};
pub use table::{load_predictions, PredictionRow, PredictionTable, SplitTag};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::par::{self, ExecMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegressorConfig {
    Ridge { penalty: f64 },
    Knn { k: usize },
}

impl Default for RegressorConfig {
    fn default() -> Self {
        RegressorConfig::Ridge { penalty: 1e-3 }
    }
}

impl RegressorConfig {
    pub fn fit(&self, x: &FeatureMatrix, y: &[f64]) -> Result<Regressor> {
        Ok(match *self {
            RegressorConfig::Ridge { penalty } => Regressor::Ridge(fit_ridge(x, y, penalty)?),
            RegressorConfig::Knn { k } => Regressor::Knn(fit_knn(x, y, k)?),
        })
    }
}

/// A fitted regressor. Immutable after fitting.
#[derive(Debug, Clone, PartialEq)]
pub enum Regressor {
    Ridge(RidgeModel),
    Knn(KnnModel),
}

impl Regressor {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Regressor::Ridge(m) => m.predict(x),
            Regressor::Knn(m) => m.predict(x),
        }
    }

    pub fn predict_all(&self, x: &FeatureMatrix, mode: ExecMode) -> Vec<f64> {
        par::map_indexed(mode, x.n_rows(), |i| self.predict(x.row(i)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierConfig {
    Logistic {
        learning_rate: f64,
        max_iters: usize,
        tolerance: f64,
    },
    Knn {
        k: usize,
    },
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::Logistic {
            learning_rate: 0.5,
            max_iters: 5000,
            tolerance: 1e-7,
        }
    }
}

impl ClassifierConfig {
    pub fn fit(&self, x: &FeatureMatrix, labels: &[u8]) -> Result<Classifier> {
        Ok(match *self {
            ClassifierConfig::Logistic {
                learning_rate,
                max_iters,
                tolerance,
            } => Classifier::Logistic(fit_logistic(x, labels, learning_rate, max_iters, tolerance)?),
            ClassifierConfig::Knn { k } => {
                let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
                Classifier::Knn(fit_knn(x, &y, k)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Logistic(LogisticModel),
    /// Score and probability are both the neighbour label mean.
    Knn(KnnModel),
}

impl Classifier {
    /// Monotone score, higher means a change is more likely.
    pub fn score(&self, x: &[f64]) -> f64 {
        match self {
            Classifier::Logistic(m) => m.score(x),
            Classifier::Knn(m) => m.predict(x),
        }
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        match self {
            Classifier::Logistic(m) => m.probability(x),
            Classifier::Knn(m) => m.predict(x),
        }
    }

    pub fn score_all(&self, x: &FeatureMatrix, mode: ExecMode) -> Vec<f64> {
        par::map_indexed(mode, x.n_rows(), |i| self.score(x.row(i)))
    }
}
