//! Prediction-interval constructors sharing one calibrate/predict contract.
//!
//! | method     | calibration scores                | interval                       |
//! |------------|-----------------------------------|--------------------------------|
//! | `naive`    | in-sample training residuals      | `f +- q` (no +1 correction)    |
//! | `split`    | held-out residuals                | `f +- Q`                       |
//! | `cv_plus`  | K-fold out-of-fold residuals      | jackknife+ order statistics    |
//! | `jab`      | bootstrap out-of-bag residuals    | jackknife+ order statistics    |
//! | `mondrian` | held-out residuals per u-stratum  | `f +- Q_k(u)`                  |
//! | `cascade`  | residuals scaled by `sigma(u)`    | `f +- Q sigma(u)`              |
//!
//! Every "(1 - alpha) quantile of calibration scores" is the
//! `ceil((n+1)(1-alpha))`-th order statistic, `+inf` when that exceeds `n`.

mod cascade;
mod cross;
mod mondrian;
mod quantile;

pub use cascade::{
    continuous_cascade_calibrate, continuous_cascade_calibrate_with_floor, continuous_cascade_predict, sigma,
    ScalingConfig, DEFAULT_SIGMA_FLOOR,
};
pub use cross::{
    bootstrap_resamples, cv_plus, jackknife_plus_ab, jackknife_plus_bounds, CvPlus, JackknifeAfterBootstrap,
    JAB_MIN_USABLE,
};
pub use mondrian::{bin_of, mondrian_calibrate, mondrian_cascade, quantile_edges, MondrianBins};
pub use quantile::{conformal_quantile, conformal_rank, empirical_quantile, kth_smallest, lower_rank};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    Split,
    CvPlus,
    Jab,
    Mondrian,
    Cascade,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Naive,
        Method::Split,
        Method::CvPlus,
        Method::Jab,
        Method::Mondrian,
        Method::Cascade,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Split => "split",
            Method::CvPlus => "cv_plus",
            Method::Jab => "jab",
            Method::Mondrian => "mondrian",
            Method::Cascade => "cascade",
        }
    }

    /// Methods that refit the regressor and so need raw features.
    pub fn needs_refit(self) -> bool {
        matches!(self, Method::CvPlus | Method::Jab)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = CascadeError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            CascadeError::config(
                "methods",
                format!("unknown method {s:?} (expected naive, split, cv_plus, jab, mondrian, cascade)"),
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub id: String,
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
    /// `2 * half_width` for symmetric methods (exact in the half-width, so
    /// equal half-widths give bit-equal lengths); `upper - lower` otherwise.
    pub length: f64,
    pub sigma: f64,
    pub u_va: f64,
    pub method: Method,
}

impl PredictionInterval {
    pub fn symmetric(id: &str, method: Method, center: f64, half_width: f64, sigma: f64, u_va: f64) -> Self {
        PredictionInterval {
            id: id.to_string(),
            center,
            lower: center - half_width,
            upper: center + half_width,
            length: 2.0 * half_width,
            sigma,
            u_va,
            method,
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }
}

/// Calibration state of a fitted method; immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub method: Method,
    pub alpha: f64,
    pub residuals: Vec<f64>,
    /// `sigma(x_i)` per calibration point; all ones for unscaled methods.
    pub sigmas: Vec<f64>,
    /// `residuals[i] / sigmas[i]`.
    pub scaled_scores: Vec<f64>,
    /// Global quantile of `scaled_scores`. For Mondrian this is the pooled
    /// split quantile, kept for reference; intervals use the per-bin values.
    pub quantile: f64,
    /// `None` for unscaled methods and for degenerate all-zero uncertainty.
    pub scaling: Option<ScalingConfig>,
    pub bins: Option<MondrianBins>,
}

impl CalibrationSummary {
    pub fn n_calibration(&self) -> usize {
        self.scaled_scores.len()
    }

    pub fn sigma_for(&self, u: f64) -> f64 {
        match (&self.method, &self.scaling) {
            (Method::Cascade, Some(cfg)) => sigma(u, cfg),
            _ => 1.0,
        }
    }

    /// Interval for one test subject with point prediction `center` and
    /// Stage-1 uncertainty `u`.
    pub fn predict(&self, id: &str, center: f64, u: f64) -> PredictionInterval {
        match (&self.method, &self.bins) {
            (Method::Mondrian, Some(bins)) => {
                PredictionInterval::symmetric(id, Method::Mondrian, center, bins.quantile_for(u), 1.0, u)
            }
            (Method::Cascade, _) => continuous_cascade_predict(self, id, u, center),
            (method, _) => PredictionInterval::symmetric(id, *method, center, self.quantile, 1.0, u),
        }
    }
}

fn check_residuals(residuals: &[f64]) -> Result<()> {
    if residuals.is_empty() {
        return Err(CascadeError::Argument("empty residual set".into()));
    }
    if residuals.iter().any(|r| r.is_nan() || *r < 0.0) {
        return Err(CascadeError::Argument(
            "residuals must be absolute values (>= 0, not NaN)".into(),
        ));
    }
    Ok(())
}

fn unscaled_summary(method: Method, residuals: &[f64], alpha: f64, quantile: f64) -> CalibrationSummary {
    CalibrationSummary {
        method,
        alpha,
        residuals: residuals.to_vec(),
        sigmas: vec![1.0; residuals.len()],
        scaled_scores: residuals.to_vec(),
        quantile,
        scaling: None,
        bins: None,
    }
}

/// Split conformal calibration on held-out absolute residuals.
pub fn split_calibrate(cal_residuals: &[f64], alpha: f64) -> Result<CalibrationSummary> {
    check_residuals(cal_residuals)?;
    let q = conformal_quantile(cal_residuals, alpha)?;
    Ok(unscaled_summary(Method::Split, cal_residuals, alpha, q))
}

/// Naive calibration on in-sample training residuals; carries no
/// finite-sample guarantee.
pub fn naive_calibrate(train_residuals: &[f64], alpha: f64) -> Result<CalibrationSummary> {
    check_residuals(train_residuals)?;
    let q = empirical_quantile(train_residuals, alpha)?;
    Ok(unscaled_summary(Method::Naive, train_residuals, alpha, q))
}

pub fn naive_interval(train_residuals: &[f64], alpha: f64, f_hat_new: f64) -> Result<PredictionInterval> {
    Ok(naive_calibrate(train_residuals, alpha)?.predict("", f_hat_new, f64::NAN))
}

pub fn split_conformal(cal_residuals: &[f64], alpha: f64, f_hat_new: f64) -> Result<PredictionInterval> {
    Ok(split_calibrate(cal_residuals, alpha)?.predict("", f_hat_new, f64::NAN))
}
