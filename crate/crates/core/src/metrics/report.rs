use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci_by, BootstrapConfig};
use super::intervals::{cascade_ratio, mean_exact, mean_winkler, stratified_rows, winkler_score, StratumRow};
use super::stats::{ks_two_sample, spearman, KsResult, SpearmanResult};
use crate::conformal::{Method, PredictionInterval};
use crate::error::{CascadeError, Result};
use crate::numfmt::{round_sig, sci, REPORT_DIGITS};
use crate::par::ExecMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiBounds {
    #[serde(with = "crate::numfmt::report_f64")]
    pub lo: f64,
    #[serde(with = "crate::numfmt::report_f64")]
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: Method,
    #[serde(with = "crate::numfmt::report_f64")]
    pub alpha: f64,
    pub n_eval: usize,
    #[serde(with = "crate::numfmt::report_f64")]
    pub marginal_coverage: f64,
    #[serde(with = "crate::numfmt::report_f64")]
    pub avg_length: f64,
    #[serde(with = "crate::numfmt::report_opt_f64")]
    pub cascade_ratio: Option<f64>,
    #[serde(with = "crate::numfmt::report_f64")]
    pub winkler: f64,
    /// Length distribution against the split baseline; absent for the
    /// baseline itself or when it was not run.
    pub ks_vs_baseline: Option<KsResult>,
    /// Rank correlation of length with `u`; absent below 3 points.
    pub spearman: Option<SpearmanResult>,
    pub per_stratum: Vec<StratumRow>,
    pub ci: BTreeMap<String, CiBounds>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub alpha: f64,
    pub k: usize,
    pub bootstrap: BootstrapConfig,
    pub mode: ExecMode,
}

fn bracket(ci: Option<(f64, f64)>, point: f64) -> Option<CiBounds> {
    let (lo, hi) = ci?;
    Some(CiBounds {
        lo: lo.min(point),
        hi: hi.max(point),
    })
}

/// Every metric for one method's intervals on the evaluation rows. CIs
/// resample evaluation points; the ratio resamples `(length, u)` pairs
/// jointly so its strata are recomputed per replicate.
pub fn evaluate(
    intervals: &[PredictionInterval],
    truths: &[f64],
    baseline_lengths: Option<&[f64]>,
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    let method = intervals
        .first()
        .ok_or_else(|| CascadeError::Argument("no evaluation rows".into()))?
        .method;
    let n = intervals.len();
    let lengths: Vec<f64> = intervals.iter().map(|iv| iv.length).collect();
    let u: Vec<f64> = intervals.iter().map(|iv| iv.u_va).collect();
    let covered: Vec<f64> = intervals
        .iter()
        .zip(truths)
        .map(|(iv, &y)| if iv.contains(y) { 1.0 } else { 0.0 })
        .collect();
    let winklers = intervals
        .iter()
        .zip(truths)
        .map(|(iv, &y)| winkler_score(iv.lower, iv.upper, y, opts.alpha))
        .collect::<Result<Vec<_>>>()?;

    let marginal_coverage = super::marginal_coverage(intervals, truths)?;
    let avg_length = mean_exact(&lengths);
    let ratio = cascade_ratio(&lengths, &u, opts.k)?;
    let winkler = mean_winkler(intervals, truths, opts.alpha)?;
    let ks_vs_baseline = match baseline_lengths {
        Some(b) if method != Method::Split => Some(ks_two_sample(&lengths, b)?),
        _ => None,
    };
    let spearman = if n >= 3 { Some(spearman(&lengths, &u)?) } else { None };
    let per_stratum = stratified_rows(intervals, truths, &u, opts.k)?;

    let mean_of = |v: &[f64], idx: &[usize]| {
        let s: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
        Some(mean_exact(&s))
    };
    let mut ci = BTreeMap::new();
    let boot = |f: &(dyn Fn(&[usize]) -> Option<f64> + Sync)| bootstrap_ci_by(n, f, &opts.bootstrap, opts.mode);
    let entries = [
        (
            "marginal_coverage",
            boot(&|idx| mean_of(&covered, idx))?,
            Some(marginal_coverage),
        ),
        ("avg_length", boot(&|idx| mean_of(&lengths, idx))?, Some(avg_length)),
        ("winkler", boot(&|idx| mean_of(&winklers, idx))?, Some(winkler)),
        (
            "cascade_ratio",
            if ratio.is_some() {
                boot(&|idx| {
                    let l: Vec<f64> = idx.iter().map(|&i| lengths[i]).collect();
                    let v: Vec<f64> = idx.iter().map(|&i| u[i]).collect();
                    cascade_ratio(&l, &v, opts.k).ok().flatten()
                })?
            } else {
                None
            },
            ratio,
        ),
    ];
    for (name, raw, point) in entries {
        if let Some(b) = point.and_then(|p| bracket(raw, p)) {
            ci.insert(name.to_string(), b);
        }
    }

    Ok(MetricsReport {
        method,
        alpha: opts.alpha,
        n_eval: n,
        marginal_coverage,
        avg_length,
        cascade_ratio: ratio,
        winkler,
        ks_vs_baseline,
        spearman,
        per_stratum,
        ci,
    })
}

/// Column order of the flat CSV rendering. Row `stratum = all` carries the
/// population metrics; one further row per stratum fills `n`, `coverage`
/// and `avg_length` only.
pub const CSV_COLUMNS: [&str; 20] = [
    "method",
    "alpha",
    "stratum",
    "n",
    "coverage",
    "avg_length",
    "cascade_ratio",
    "winkler",
    "ks_d",
    "ks_p",
    "spearman_rho",
    "spearman_p",
    "coverage_lo",
    "coverage_hi",
    "avg_length_lo",
    "avg_length_hi",
    "cascade_ratio_lo",
    "cascade_ratio_hi",
    "winkler_lo",
    "winkler_hi",
];

/// Report-precision number text; empty for an undefined value. Magnitudes
/// outside `[1e-4, 1e15)` use exponent notation.
pub fn render_number(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x.is_finite() => {
            let r = round_sig(x, REPORT_DIGITS);
            if r != 0.0 && !(1e-4..1e15).contains(&r.abs()) {
                format!("{r:e}")
            } else {
                format!("{r}")
            }
        }
        Some(x) => sci(x, REPORT_DIGITS),
    }
}

impl MetricsReport {
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let num = |v: f64| render_number(Some(v));
        let opt = render_number;
        let ci = |key: &str| {
            self.ci
                .get(key)
                .map_or([String::new(), String::new()], |b| [num(b.lo), num(b.hi)])
        };
        let mut all = vec![
            self.method.to_string(),
            num(self.alpha),
            "all".to_string(),
            self.n_eval.to_string(),
            num(self.marginal_coverage),
            num(self.avg_length),
            opt(self.cascade_ratio),
            num(self.winkler),
            opt(self.ks_vs_baseline.map(|k| k.d)),
            opt(self.ks_vs_baseline.map(|k| k.p)),
            opt(self.spearman.and_then(|s| s.rho)),
            opt(self.spearman.and_then(|s| s.p)),
        ];
        for key in ["marginal_coverage", "avg_length", "cascade_ratio", "winkler"] {
            all.extend(ci(key));
        }
        let mut rows = vec![all];
        for s in &self.per_stratum {
            let mut row = vec![
                self.method.to_string(),
                num(self.alpha),
                s.stratum.clone(),
                s.n.to_string(),
                opt(s.coverage),
                opt(s.avg_length),
            ];
            row.resize(CSV_COLUMNS.len(), String::new());
            rows.push(row);
        }
        rows
    }
}
