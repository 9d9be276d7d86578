use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::features::FeatureMatrix;

/// k-nearest-neighbour mean under Euclidean distance. Distance ties are
/// broken by lower training row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    features: FeatureMatrix,
    targets: Vec<f64>,
    k: usize,
}

pub fn fit_knn(x: &FeatureMatrix, targets: &[f64], k: usize) -> Result<KnnModel> {
    if targets.len() != x.n_rows() {
        return Err(CascadeError::Argument(format!(
            "{} targets for {} rows",
            targets.len(),
            x.n_rows()
        )));
    }
    if k == 0 || k > x.n_rows() {
        return Err(CascadeError::config(
            "k",
            format!("k = {k} must lie in 1..={}", x.n_rows()),
        ));
    }
    Ok(KnnModel {
        features: x.clone(),
        targets: targets.to_vec(),
        k,
    })
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .features
            .rows()
            .enumerate()
            .map(|(i, row)| {
                let d2: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        let k = self.k;
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, by_distance_then_index);
            dist.truncate(k);
        }
        dist.sort_unstable_by(by_distance_then_index);
        dist.iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / k as f64
    }
}
