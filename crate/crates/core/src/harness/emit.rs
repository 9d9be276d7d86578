//! Persisted artifacts. Every file is a pure function of the experiment
//! output, so reruns with the same seed are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::ablate::{AblationParam, AblationTable};
use super::experiment::{CalibrationRecord, Experiment};
use super::pipeline::Prepared;
use crate::error::{CascadeError, Result};
use crate::metrics::{render_number, MetricsReport, CSV_COLUMNS};
use crate::numfmt::exact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = CascadeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(CascadeError::config(
                "format",
                format!("unknown format {other:?}; expected json or csv"),
            )),
        }
    }
}

pub const REPORT_JSON: &str = "report.json";
pub const INTERVALS_CSV: &str = "intervals.csv";
pub const SUBJECTS_CSV: &str = "subjects.csv";
pub const CALIBRATION_JSON: &str = "calibration.json";

pub fn ablation_file(param: AblationParam, format: ReportFormat) -> String {
    format!("ablation_{}.{}", param.as_str(), format.extension())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CascadeError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CascadeError::io(path, e))
}

fn json_text<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn render_reports(reports: &[MetricsReport], format: ReportFormat) -> Result<String> {
    if reports.is_empty() {
        return Err(CascadeError::config("methods", "no reports to emit"));
    }
    Ok(match format {
        ReportFormat::Json => json_text(reports),
        ReportFormat::Csv => csv_text(&CSV_COLUMNS, reports.iter().flat_map(|r| r.csv_rows())),
    })
}

/// Writes reports as nested JSON or flat CSV (columns in [`CSV_COLUMNS`]).
pub fn emit_report(reports: &[MetricsReport], format: ReportFormat, path: &Path) -> Result<()> {
    write_file(path, &render_reports(reports, format)?)
}

pub fn load_reports(path: &Path) -> Result<Vec<MetricsReport>> {
    let text = fs::read_to_string(path).map_err(|e| CascadeError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CascadeError::parse(e.line(), format!("{}: {e}", path.display())))
}

pub const INTERVAL_COLUMNS: [&str; 10] = [
    "method", "id", "center", "lower", "upper", "length", "sigma", "u_va", "y", "covered",
];

pub fn render_intervals(exp: &Experiment) -> String {
    let p = &exp.prepared;
    let rows = exp.runs.iter().flat_map(|run| {
        run.intervals.iter().zip(&p.eval_test).map(|(iv, &i)| {
            vec![
                run.method.to_string(),
                iv.id.clone(),
                exact(iv.center),
                exact(iv.lower),
                exact(iv.upper),
                exact(iv.length),
                exact(iv.sigma),
                exact(iv.u_va),
                exact(p.y[i]),
                u8::from(iv.contains(p.y[i])).to_string(),
            ]
        })
    });
    csv_text(&INTERVAL_COLUMNS, rows)
}

pub const SUBJECT_COLUMNS: [&str; 10] = [
    "id",
    "split",
    "y",
    "change_label",
    "reg_pred",
    "clf_score",
    "p0",
    "p1",
    "u_va",
    "eval",
];

pub fn render_subjects(p: &Prepared) -> String {
    let mut in_eval = vec![false; p.n_rows()];
    for &i in p.eval_train.iter().chain(&p.eval_cal).chain(&p.eval_test) {
        in_eval[i] = true;
    }
    let rows = (0..p.n_rows()).map(|i| {
        let va =
            |f: fn(&crate::venn_abers::VennAbersOutput) -> f64| p.va[i].as_ref().map_or(String::new(), |v| exact(f(v)));
        vec![
            p.ids[i].clone(),
            p.split[i].to_string(),
            exact(p.y[i]),
            p.labels[i].to_string(),
            exact(p.reg_pred[i]),
            exact(p.clf_score[i]),
            va(|v| v.p0),
            va(|v| v.p1),
            va(|v| v.u),
            u8::from(in_eval[i]).to_string(),
        ]
    });
    csv_text(&SUBJECT_COLUMNS, rows)
}

/// Files written by `run`: the JSON report (always, it is what `report`
/// re-renders), the CSV report when requested, intervals, subjects and the
/// calibration record.
pub fn write_run_artifacts(exp: &Experiment, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &text)?;
        written.push(path);
        Ok(())
    };
    put(REPORT_JSON, render_reports(&exp.reports, ReportFormat::Json)?)?;
    if format == ReportFormat::Csv {
        put("report.csv", render_reports(&exp.reports, ReportFormat::Csv)?)?;
    }
    put(INTERVALS_CSV, render_intervals(exp))?;
    put(SUBJECTS_CSV, render_subjects(&exp.prepared))?;
    put(CALIBRATION_JSON, json_text(&exp.calibration))?;
    Ok(written)
}

pub fn load_calibration(path: &Path) -> Result<CalibrationRecord> {
    let text = fs::read_to_string(path).map_err(|e| CascadeError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CascadeError::parse(e.line(), format!("{}: {e}", path.display())))
}

pub const ABLATION_COLUMNS: [&str; 15] = [
    "parameter",
    "value",
    "method",
    "alpha",
    "beta",
    "k",
    "coverage",
    "avg_length",
    "cascade_ratio",
    "mean_bin_count",
    "status",
    "strata_n",
    "strata_coverage",
    "strata_length",
    "upstream",
];

pub fn render_ablation(table: &AblationTable, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => json_text(table),
        ReportFormat::Csv => {
            let join = |items: Vec<String>| items.join(";");
            let rows = table.rows.iter().map(|r| {
                vec![
                    table.parameter.to_string(),
                    render_number(Some(r.value)),
                    r.method.to_string(),
                    render_number(Some(r.alpha)),
                    render_number(Some(r.beta)),
                    r.k.to_string(),
                    render_number(Some(r.coverage)),
                    render_number(Some(r.avg_length)),
                    render_number(r.cascade_ratio),
                    render_number(r.mean_bin_count),
                    serde_json::to_value(r.status)
                        .expect("status")
                        .as_str()
                        .expect("string")
                        .to_string(),
                    join(r.per_stratum.iter().map(|s| s.n.to_string()).collect()),
                    join(r.per_stratum.iter().map(|s| render_number(s.coverage)).collect()),
                    join(r.per_stratum.iter().map(|s| render_number(s.avg_length)).collect()),
                    r.upstream.clone(),
                ]
            });
            csv_text(&ABLATION_COLUMNS, rows)
        }
    }
}

/// Writes `ablation_<param>.json`, plus the CSV rendering when requested.
pub fn write_ablation_artifacts(table: &AblationTable, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let formats: &[ReportFormat] = match format {
        ReportFormat::Json => &[ReportFormat::Json],
        ReportFormat::Csv => &[ReportFormat::Json, ReportFormat::Csv],
    };
    for &f in formats {
        let path = dir.join(ablation_file(table.parameter, f));
        write_file(&path, &render_ablation(table, f))?;
        written.push(path);
    }
    Ok(written)
}

pub fn load_ablation(path: &Path) -> Result<AblationTable> {
    let text = fs::read_to_string(path).map_err(|e| CascadeError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CascadeError::parse(e.line(), format!("{}: {e}", path.display())))
}
