use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::pipeline::{prepare, run_method, ConformalParams, Prepared};
use crate::conformal::Method;
use crate::error::{CascadeError, Result};
use crate::metrics::{cascade_ratio, marginal_coverage, stratified_rows, StratumRow};
use crate::par::{self, ExecMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AblationParam {
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "K")]
    K,
}

impl AblationParam {
    pub fn as_str(self) -> &'static str {
        match self {
            AblationParam::Beta => "beta",
            AblationParam::Alpha => "alpha",
            AblationParam::K => "K",
        }
    }

    /// Methods whose intervals depend on the parameter.
    pub fn methods(self) -> &'static [Method] {
        match self {
            AblationParam::Beta => &[Method::Cascade],
            AblationParam::Alpha => &[Method::Split, Method::Mondrian, Method::Cascade],
            AblationParam::K => &[Method::Mondrian, Method::Cascade],
        }
    }
}

impl fmt::Display for AblationParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AblationParam {
    type Err = CascadeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(AblationParam::Beta),
            "alpha" => Ok(AblationParam::Alpha),
            "K" | "k" => Ok(AblationParam::K),
            other => Err(CascadeError::config(
                "param",
                format!("unknown parameter {other:?}; expected beta, alpha or K"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Coverage at least `1 - alpha - 0.02`.
    Valid,
    Unsafe,
    /// The valid row with the highest ratio for its method.
    Optimal,
}

pub const COVERAGE_SLACK: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    #[serde(with = "crate::numfmt::report_f64")]
    pub value: f64,
    pub method: Method,
    #[serde(with = "crate::numfmt::report_f64")]
    pub alpha: f64,
    #[serde(with = "crate::numfmt::report_f64")]
    pub beta: f64,
    pub k: usize,
    #[serde(with = "crate::numfmt::report_f64")]
    pub coverage: f64,
    #[serde(with = "crate::numfmt::report_f64")]
    pub avg_length: f64,
    #[serde(with = "crate::numfmt::report_opt_f64")]
    pub cascade_ratio: Option<f64>,
    pub per_stratum: Vec<StratumRow>,
    /// Mean calibration points per Mondrian bin.
    #[serde(with = "crate::numfmt::report_opt_f64")]
    pub mean_bin_count: Option<f64>,
    pub status: Status,
    /// [`Prepared::fingerprint`] of the shared upstream stage, in hex.
    pub upstream: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub parameter: AblationParam,
    pub rows: Vec<AblationRow>,
}

fn grid(cfg: &ExperimentConfig, param: AblationParam) -> Vec<f64> {
    let mut values: Vec<f64> = match param {
        AblationParam::Beta => cfg.ablation.beta_grid.clone(),
        AblationParam::Alpha => cfg.ablation.alpha_grid.clone(),
        AblationParam::K => cfg.ablation.k_list.iter().map(|&k| k as f64).collect(),
    };
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

pub fn ablate(cfg: &ExperimentConfig, param: AblationParam) -> Result<AblationTable> {
    let prepared = prepare(cfg)?;
    ablate_prepared(cfg, &prepared, param)
}

/// Runs the grid on one prepared stage; only the conformal layer and its
/// metrics execute per grid point.
pub fn ablate_prepared(cfg: &ExperimentConfig, prepared: &Prepared, param: AblationParam) -> Result<AblationTable> {
    let values = grid(cfg, param);
    if values.is_empty() {
        return Err(CascadeError::config(
            format!("ablation.{}", if param == AblationParam::K { "k_list" } else { "grid" }),
            format!("the {param} grid is empty"),
        ));
    }
    let base = ConformalParams::from_config(cfg);
    let methods = param.methods();
    let truths: Vec<f64> = prepared.eval_test.iter().map(|&i| prepared.y[i]).collect();
    let upstream = format!("{:016x}", prepared.fingerprint());
    // grid points are independent; the inner layer runs serially
    let n_cells = values.len() * methods.len();
    let mut rows = par::try_map_indexed(cfg.exec, n_cells, |cell| {
        let value = values[cell / methods.len()];
        let method = methods[cell % methods.len()];
        let mut params = ConformalParams {
            mode: ExecMode::Serial,
            ..base
        };
        match param {
            AblationParam::Beta => params.beta = value,
            AblationParam::Alpha => params.alpha = value,
            AblationParam::K => params.k = value as usize,
        }
        let run = run_method(prepared, method, &params).map_err(|e| e.context(format!("{param} = {value}")))?;
        let lengths: Vec<f64> = run.intervals.iter().map(|iv| iv.length).collect();
        let u: Vec<f64> = run.intervals.iter().map(|iv| iv.u_va).collect();
        let mean_bin_count = run
            .summary
            .as_ref()
            .and_then(|s| s.bins.as_ref())
            .map(|b| b.counts.iter().sum::<usize>() as f64 / b.counts.len() as f64);
        Ok::<_, CascadeError>(AblationRow {
            value,
            method,
            alpha: params.alpha,
            beta: params.beta,
            k: params.k,
            coverage: marginal_coverage(&run.intervals, &truths)?,
            avg_length: lengths.iter().sum::<f64>() / lengths.len() as f64,
            cascade_ratio: cascade_ratio(&lengths, &u, params.k)?,
            per_stratum: stratified_rows(&run.intervals, &truths, &u, params.k)?,
            mean_bin_count,
            status: Status::Unsafe,
            upstream: upstream.clone(),
        })
    })?;
    assign_status(&mut rows);
    Ok(AblationTable { parameter: param, rows })
}

fn assign_status(rows: &mut [AblationRow]) {
    for r in rows.iter_mut() {
        r.status = if r.coverage >= 1.0 - r.alpha - COVERAGE_SLACK {
            Status::Valid
        } else {
            Status::Unsafe
        };
    }
    let methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
    for m in methods {
        // first row wins ties, i.e. the smallest parameter value
        let best = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.method == m && r.status != Status::Unsafe)
            .filter_map(|(i, r)| r.cascade_ratio.map(|c| (i, c)))
            .fold(None, |acc: Option<(usize, f64)>, (i, c)| match acc {
                Some((_, bc)) if bc >= c => acc,
                _ => Some((i, c)),
            });
        if let Some((i, _)) = best {
            rows[i].status = Status::Optimal;
        }
    }
}
