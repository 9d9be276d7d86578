use serde::{Deserialize, Serialize};

use super::config::{EvalFilter, ExperimentConfig};
use super::pipeline::{prepare, run_method, ConformalParams, MethodRun, Prepared};
use crate::conformal::Method;
use crate::error::Result;
use crate::metrics::{evaluate, EvalOptions, MetricsReport};
use crate::numfmt::Exact;

/// Calibration-side state persisted next to the reports, enough to audit
/// the evaluation filter and every method's quantiles without the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub filter: EvalFilter,
    /// Score-space cut; rows with `clf_score` above it count as predicted
    /// positive.
    pub youden_threshold: Option<Exact>,
    pub youden_j: Option<Exact>,
    pub n_cal_eval: usize,
    pub n_test_eval: usize,
    /// Mean Venn-Abers `u` over the evaluation calibration rows.
    pub u_bar: Exact,
    pub methods: Vec<MethodCalibration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCalibration {
    pub method: Method,
    pub n_calibration: Option<usize>,
    pub quantile: Option<Exact>,
    pub bin_edges: Option<Vec<Exact>>,
    pub bin_counts: Option<Vec<usize>>,
    pub bin_quantiles: Option<Vec<Exact>>,
}

impl MethodCalibration {
    fn from_run(run: &MethodRun) -> Self {
        let s = run.summary.as_ref();
        let bins = s.and_then(|s| s.bins.as_ref());
        let exacts = |v: &[f64]| v.iter().map(|&x| Exact(x)).collect();
        MethodCalibration {
            method: run.method,
            n_calibration: s.map(|s| s.n_calibration()),
            quantile: s.map(|s| Exact(s.quantile)),
            bin_edges: bins.map(|b| exacts(&b.edges)),
            bin_counts: bins.map(|b| b.counts.clone()),
            bin_quantiles: bins.map(|b| exacts(&b.quantiles)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub prepared: Prepared,
    pub runs: Vec<MethodRun>,
    pub reports: Vec<MetricsReport>,
    pub calibration: CalibrationRecord,
}

/// Requested methods in order, without repeats.
pub fn unique_methods(methods: &[Method]) -> Vec<Method> {
    let mut out: Vec<Method> = Vec::new();
    for &m in methods {
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    let prepared = prepare(cfg)?;
    run_prepared(cfg, prepared)
}

/// Conformal layer plus metrics on already prepared data.
pub fn run_prepared(cfg: &ExperimentConfig, prepared: Prepared) -> Result<Experiment> {
    let params = ConformalParams::from_config(cfg);
    let runs = unique_methods(&cfg.methods)
        .into_iter()
        .map(|m| run_method(&prepared, m, &params))
        .collect::<Result<Vec<_>>>()?;
    let baseline = match runs.iter().find(|r| r.method == Method::Split) {
        Some(r) => r.intervals.clone(),
        None => run_method(&prepared, Method::Split, &params)?.intervals,
    };
    let baseline_lengths: Vec<f64> = baseline.iter().map(|iv| iv.length).collect();
    let truths: Vec<f64> = prepared.eval_test.iter().map(|&i| prepared.y[i]).collect();
    let opts = EvalOptions {
        alpha: cfg.alpha,
        k: cfg.k,
        bootstrap: cfg.bootstrap(),
        mode: cfg.exec,
    };
    let reports = runs
        .iter()
        .map(|r| {
            evaluate(&r.intervals, &truths, Some(&baseline_lengths), &opts)
                .map_err(|e| e.context(format!("metrics for {}", r.method)))
        })
        .collect::<Result<Vec<_>>>()?;
    let cal_u: Vec<f64> = prepared.eval_cal.iter().map(|&i| prepared.u(i)).collect();
    let calibration = CalibrationRecord {
        filter: prepared.filter,
        youden_threshold: prepared.youden.map(|c| Exact(c.threshold)),
        youden_j: prepared.youden.map(|c| Exact(c.j)),
        n_cal_eval: prepared.eval_cal.len(),
        n_test_eval: prepared.eval_test.len(),
        u_bar: Exact(cal_u.iter().sum::<f64>() / cal_u.len() as f64),
        methods: runs.iter().map(MethodCalibration::from_run).collect(),
    };
    Ok(Experiment {
        prepared,
        runs,
        reports,
        calibration,
    })
}
