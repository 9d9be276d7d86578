use serde::{Deserialize, Serialize};

use super::{conformal_quantile, CalibrationSummary, Method, PredictionInterval};
use crate::error::{CascadeError, Result};

pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-3;

/// Mean-centred scaling `sigma(u) = max(floor, 1 + beta (u / u_bar - 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub beta: f64,
    pub u_bar: f64,
    pub sigma_floor: f64,
}

impl ScalingConfig {
    pub fn new(beta: f64, u_bar: f64, sigma_floor: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(CascadeError::config("beta", format!("{beta} must be finite and >= 0")));
        }
        if !(u_bar > 0.0 && u_bar.is_finite()) {
            return Err(CascadeError::Argument(format!("u_bar = {u_bar} must be positive")));
        }
        if !(sigma_floor > 0.0 && sigma_floor <= 1.0) {
            return Err(CascadeError::config("sigma_floor", "must lie in (0, 1]"));
        }
        Ok(ScalingConfig {
            beta,
            u_bar,
            sigma_floor,
        })
    }
}

pub fn sigma(u: f64, cfg: &ScalingConfig) -> f64 {
    (1.0 + cfg.beta * (u / cfg.u_bar - 1.0)).max(cfg.sigma_floor)
}

/// Scaled scores `S_i = r_i / sigma(u_i)` over the full calibration set and
/// their conformal quantile.
///
/// A calibration set whose uncertainties are all zero carries no signal; the
/// summary then falls back to `sigma = 1` (split conformal) and logs a warning.
pub fn continuous_cascade_calibrate_with_floor(
    cal_residuals: &[f64],
    cal_u: &[f64],
    beta: f64,
    alpha: f64,
    sigma_floor: f64,
) -> Result<CalibrationSummary> {
    if cal_residuals.is_empty() {
        return Err(CascadeError::Argument("empty calibration set".into()));
    }
    if cal_residuals.len() != cal_u.len() {
        return Err(CascadeError::Argument(format!(
            "{} residuals but {} uncertainty scores",
            cal_residuals.len(),
            cal_u.len()
        )));
    }
    if cal_u.iter().any(|u| !(*u >= 0.0 && u.is_finite())) {
        return Err(CascadeError::Argument(
            "uncertainty scores must be finite and >= 0".into(),
        ));
    }
    let u_bar = cal_u.iter().sum::<f64>() / cal_u.len() as f64;
    let scaling = if u_bar > 0.0 {
        Some(ScalingConfig::new(beta, u_bar, sigma_floor)?)
    } else {
        log::warn!("all calibration uncertainty scores are zero; continuous CASCADE falls back to sigma = 1");
        ScalingConfig::new(beta, 1.0, sigma_floor)?;
        None
    };
    let sigmas: Vec<f64> = match &scaling {
        Some(cfg) => cal_u.iter().map(|&u| sigma(u, cfg)).collect(),
        None => vec![1.0; cal_u.len()],
    };
    let scaled_scores: Vec<f64> = cal_residuals.iter().zip(&sigmas).map(|(r, s)| r / s).collect();
    let quantile = conformal_quantile(&scaled_scores, alpha)?;
    Ok(CalibrationSummary {
        method: Method::Cascade,
        alpha,
        residuals: cal_residuals.to_vec(),
        sigmas,
        scaled_scores,
        quantile,
        scaling,
        bins: None,
    })
}

pub fn continuous_cascade_calibrate(
    cal_residuals: &[f64],
    cal_u: &[f64],
    beta: f64,
    alpha: f64,
) -> Result<CalibrationSummary> {
    continuous_cascade_calibrate_with_floor(cal_residuals, cal_u, beta, alpha, DEFAULT_SIGMA_FLOOR)
}

/// `f_hat +- Q sigma(u_new)`.
pub fn continuous_cascade_predict(
    summary: &CalibrationSummary,
    id: &str,
    u_new: f64,
    f_hat_new: f64,
) -> PredictionInterval {
    let s = summary.sigma_for(u_new);
    PredictionInterval::symmetric(id, Method::Cascade, f_hat_new, summary.quantile * s, s, u_new)
}
