//! Refitting baselines: CV+ and jackknife+-after-bootstrap.
//!
//! Both produce, for every calibration point `i`, a leave-out prediction
//! `mu_{-i}(x_new)` and residual `R_i`. The interval is
//! `[ floor((n+1)alpha)-th smallest of mu_{-i} - R_i,
//!    ceil((n+1)(1-alpha))-th smallest of mu_{-i} + R_i ]`.

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{conformal_rank, kth_smallest, lower_rank, Method, PredictionInterval};
use crate::error::{CascadeError, Result};
use crate::features::FeatureMatrix;
use crate::learners::{Regressor, RegressorConfig};
use crate::par::{self, ExecMode};
use crate::rng;

/// Minimum retained out-of-bag points once any point had to be dropped.
pub const JAB_MIN_USABLE: usize = 10;

/// Jackknife+ bounds from leave-out predictions at the test point and the
/// matching calibration residuals. Unreachable ranks give infinite bounds.
pub fn jackknife_plus_bounds(loo_preds: &[f64], residuals: &[f64], alpha: f64) -> Result<(f64, f64)> {
    if loo_preds.is_empty() || loo_preds.len() != residuals.len() {
        return Err(CascadeError::Argument(format!(
            "jackknife+ needs matching nonempty inputs ({} predictions, {} residuals)",
            loo_preds.len(),
            residuals.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CascadeError::Argument(format!("alpha = {alpha} outside (0, 1)")));
    }
    let n = loo_preds.len();
    let k_lo = lower_rank(n, alpha);
    let lower = if k_lo == 0 {
        f64::NEG_INFINITY
    } else {
        let lows: Vec<f64> = loo_preds.iter().zip(residuals).map(|(m, r)| m - r).collect();
        kth_smallest(&lows, k_lo)
    };
    let k_up = conformal_rank(n, alpha);
    let upper = if k_up > n {
        f64::INFINITY
    } else {
        let ups: Vec<f64> = loo_preds.iter().zip(residuals).map(|(m, r)| m + r).collect();
        kth_smallest(&ups, k_up)
    };
    Ok((lower, upper))
}

fn asymmetric(id: &str, method: Method, center: f64, (lower, upper): (f64, f64), u: f64) -> PredictionInterval {
    PredictionInterval {
        id: id.to_string(),
        center,
        lower,
        upper,
        length: upper - lower,
        sigma: 1.0,
        u_va: u,
        method,
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Debug, Clone)]
pub struct CvPlus {
    models: Vec<Regressor>,
    fold_of: Vec<usize>,
    residuals: Vec<f64>,
    alpha: f64,
}

impl CvPlus {
    /// Random balanced fold assignment, then [`CvPlus::from_folds`].
    pub fn calibrate(
        x: &FeatureMatrix,
        y: &[f64],
        learner: &RegressorConfig,
        k_folds: usize,
        alpha: f64,
        seed: u64,
        mode: ExecMode,
    ) -> Result<Self> {
        let n = x.n_rows();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::stream(seed, rng::STREAM_CV_FOLDS));
        let mut fold_of = vec![0; n];
        for (rank, &i) in order.iter().enumerate() {
            fold_of[i] = rank % k_folds.max(1);
        }
        Self::from_folds(x, y, learner, fold_of, k_folds, alpha, mode)
    }

    pub fn from_folds(
        x: &FeatureMatrix,
        y: &[f64],
        learner: &RegressorConfig,
        fold_of: Vec<usize>,
        k_folds: usize,
        alpha: f64,
        mode: ExecMode,
    ) -> Result<Self> {
        if k_folds < 2 {
            return Err(CascadeError::config(
                "cv_folds",
                format!("K = {k_folds} must be at least 2"),
            ));
        }
        if fold_of.len() != x.n_rows() || y.len() != x.n_rows() {
            return Err(CascadeError::Argument("fold assignment does not match the data".into()));
        }
        let mut sizes = vec![0usize; k_folds];
        for &f in &fold_of {
            if f >= k_folds {
                return Err(CascadeError::Argument(format!("fold index {f} out of range")));
            }
            sizes[f] += 1;
        }
        if let Some(k) = sizes.iter().position(|&s| s < 2) {
            return Err(CascadeError::config(
                "cv_folds",
                format!("fold {k} has {} points; every fold needs at least 2", sizes[k]),
            ));
        }
        let models = par::try_map_indexed(mode, k_folds, |k| {
            let keep: Vec<usize> = (0..fold_of.len()).filter(|&i| fold_of[i] != k).collect();
            let yk: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
            learner.fit(&x.select(&keep), &yk)
        })?;
        let residuals = (0..x.n_rows())
            .map(|i| (y[i] - models[fold_of[i]].predict(x.row(i))).abs())
            .collect();
        Ok(CvPlus {
            models,
            fold_of,
            residuals,
            alpha,
        })
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn predict(&self, id: &str, x_new: &[f64], u: f64) -> Result<PredictionInterval> {
        let fold_preds: Vec<f64> = self.models.iter().map(|m| m.predict(x_new)).collect();
        let loo: Vec<f64> = self.fold_of.iter().map(|&k| fold_preds[k]).collect();
        let bounds = jackknife_plus_bounds(&loo, &self.residuals, self.alpha)?;
        Ok(asymmetric(id, Method::CvPlus, mean(&fold_preds), bounds, u))
    }
}

pub fn cv_plus(
    features_train: &FeatureMatrix,
    targets_train: &[f64],
    learner: &RegressorConfig,
    k_folds: usize,
    alpha: f64,
    seed: u64,
    x_new: &[f64],
) -> Result<PredictionInterval> {
    CvPlus::calibrate(
        features_train,
        targets_train,
        learner,
        k_folds,
        alpha,
        seed,
        ExecMode::Serial,
    )?
    .predict("", x_new, f64::NAN)
}

/// `b` bootstrap resamples of `0..n`, each of size `n` with replacement,
/// drawn from per-resample streams of `seed`.
pub fn bootstrap_resamples(n: usize, b: usize, seed: u64) -> Vec<Vec<usize>> {
    let base = rng::derive_seed(seed, rng::STREAM_JAB);
    (0..b)
        .map(|j| {
            let mut r = rng::stream(base, j as u64);
            (0..n).map(|_| r.random_range(0..n)).collect()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct JackknifeAfterBootstrap {
    models: Vec<Regressor>,
    /// Out-of-bag model indices for each retained calibration point.
    oob: Vec<Vec<usize>>,
    residuals: Vec<f64>,
    dropped: usize,
    alpha: f64,
}

impl JackknifeAfterBootstrap {
    pub fn calibrate(
        x: &FeatureMatrix,
        y: &[f64],
        learner: &RegressorConfig,
        n_bootstrap: usize,
        alpha: f64,
        seed: u64,
        mode: ExecMode,
    ) -> Result<Self> {
        if n_bootstrap < 20 {
            return Err(CascadeError::config(
                "jab_bootstrap",
                format!("{n_bootstrap} resamples; at least 20 are required"),
            ));
        }
        let resamples = bootstrap_resamples(x.n_rows(), n_bootstrap, seed);
        Self::from_resamples(x, y, learner, &resamples, alpha, JAB_MIN_USABLE, mode)
    }

    /// Builds the calibration from explicit resamples. Points that appear in
    /// every resample have no out-of-bag model and are dropped; if that
    /// leaves fewer than `min_usable` points the calibration fails.
    pub fn from_resamples(
        x: &FeatureMatrix,
        y: &[f64],
        learner: &RegressorConfig,
        resamples: &[Vec<usize>],
        alpha: f64,
        min_usable: usize,
        mode: ExecMode,
    ) -> Result<Self> {
        let n = x.n_rows();
        if y.len() != n {
            return Err(CascadeError::Argument(format!("{} targets for {} rows", y.len(), n)));
        }
        if resamples.is_empty() {
            return Err(CascadeError::config("jab_bootstrap", "no bootstrap resamples"));
        }
        let models = par::try_map_indexed(mode, resamples.len(), |b| {
            let yb: Vec<f64> = resamples[b].iter().map(|&i| y[i]).collect();
            learner.fit(&x.select(&resamples[b]), &yb)
        })?;
        let mut in_bag = vec![vec![false; n]; resamples.len()];
        for (bag, sample) in in_bag.iter_mut().zip(resamples) {
            for &i in sample {
                bag[i] = true;
            }
        }
        let mut oob = Vec::with_capacity(n);
        let mut residuals = Vec::with_capacity(n);
        let mut dropped = 0;
        for i in 0..n {
            let members: Vec<usize> = (0..resamples.len()).filter(|&b| !in_bag[b][i]).collect();
            if members.is_empty() {
                dropped += 1;
                continue;
            }
            let preds: Vec<f64> = members.iter().map(|&b| models[b].predict(x.row(i))).collect();
            residuals.push((y[i] - mean(&preds)).abs());
            oob.push(members);
        }
        if dropped > 0 {
            log::warn!("jackknife+-after-bootstrap dropped {dropped} points with no out-of-bag model");
            if oob.len() < min_usable {
                return Err(CascadeError::Calibration(format!(
                    "only {} out-of-bag points remain (need {min_usable}); increase jab_bootstrap",
                    oob.len()
                )));
            }
        }
        if oob.is_empty() {
            return Err(CascadeError::Calibration("no out-of-bag calibration points".into()));
        }
        Ok(JackknifeAfterBootstrap {
            models,
            oob,
            residuals,
            dropped,
            alpha,
        })
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn predict(&self, id: &str, x_new: &[f64], u: f64) -> Result<PredictionInterval> {
        let preds: Vec<f64> = self.models.iter().map(|m| m.predict(x_new)).collect();
        let loo: Vec<f64> = self
            .oob
            .iter()
            .map(|members| members.iter().map(|&b| preds[b]).sum::<f64>() / members.len() as f64)
            .collect();
        let bounds = jackknife_plus_bounds(&loo, &self.residuals, self.alpha)?;
        Ok(asymmetric(id, Method::Jab, mean(&preds), bounds, u))
    }
}

pub fn jackknife_plus_ab(
    features_train: &FeatureMatrix,
    targets_train: &[f64],
    learner: &RegressorConfig,
    n_bootstrap: usize,
    alpha: f64,
    seed: u64,
    x_new: &[f64],
) -> Result<PredictionInterval> {
    JackknifeAfterBootstrap::calibrate(
        features_train,
        targets_train,
        learner,
        n_bootstrap,
        alpha,
        seed,
        ExecMode::Serial,
    )?
    .predict("", x_new, f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_data(n: usize) -> (FeatureMatrix, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let y = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        (FeatureMatrix::new(n, 1, xs).unwrap(), y)
    }

    #[test]
    fn perfect_learner_collapses_to_fold_span() {
        let (x, y) = line_data(40);
        let ridge = RegressorConfig::Ridge { penalty: 0.0 };
        let cv = CvPlus::calibrate(&x, &y, &ridge, 4, 0.2, 1, ExecMode::Serial).unwrap();
        assert!(cv.residuals().iter().all(|r| *r < 1e-12));
        let iv = cv.predict("a", &[0.5], 0.0).unwrap();
        assert!((iv.lower - 0.5).abs() < 1e-9 && (iv.upper - 0.5).abs() < 1e-9);
        assert!(iv.lower <= iv.upper);
    }

    #[test]
    fn small_folds_rejected() {
        let (x, y) = line_data(5);
        let ridge = RegressorConfig::Ridge { penalty: 0.1 };
        assert!(matches!(
            CvPlus::calibrate(&x, &y, &ridge, 3, 0.2, 1, ExecMode::Serial),
            Err(CascadeError::Config { .. })
        ));
        assert!(CvPlus::calibrate(&x, &y, &ridge, 1, 0.2, 1, ExecMode::Serial).is_err());
    }

    #[test]
    fn single_resample_single_calibration_point() {
        // resample covers everything except row 1
        let (x, mut y) = line_data(6);
        y[1] += 0.5;
        let knn = RegressorConfig::Knn { k: 5 };
        let resample = vec![vec![0, 2, 3, 4, 5, 0]];
        let jab = JackknifeAfterBootstrap::from_resamples(&x, &y, &knn, &resample, 0.5, 1, ExecMode::Serial).unwrap();
        assert_eq!(jab.residuals().len(), 1);
        assert_eq!(jab.dropped(), 5);
        let model = knn
            .fit(
                &x.select(&resample[0]),
                &resample[0].iter().map(|&i| y[i]).collect::<Vec<_>>(),
            )
            .unwrap();
        let r1 = (y[1] - model.predict(x.row(1))).abs();
        let mu = model.predict(&[0.3]);
        let iv = jab.predict("a", &[0.3], 0.0).unwrap();
        assert_eq!((iv.lower, iv.upper), (mu - r1, mu + r1));
        // the same resample under the default usable-point floor fails
        assert!(matches!(
            JackknifeAfterBootstrap::from_resamples(&x, &y, &knn, &resample, 0.5, JAB_MIN_USABLE, ExecMode::Serial),
            Err(CascadeError::Calibration(_))
        ));
    }

    #[test]
    fn zero_residuals_degenerate_interval() {
        let (x, y) = line_data(30);
        let ridge = RegressorConfig::Ridge { penalty: 0.0 };
        let jab = JackknifeAfterBootstrap::calibrate(&x, &y, &ridge, 25, 0.2, 3, ExecMode::Serial).unwrap();
        let iv = jab.predict("a", &[0.4], 0.0).unwrap();
        assert!((iv.lower - iv.center).abs() < 1e-9 && (iv.upper - iv.center).abs() < 1e-9);
        assert!(JackknifeAfterBootstrap::calibrate(&x, &y, &ridge, 19, 0.2, 3, ExecMode::Serial).is_err());
    }
}
