//! Data preparation and the conformal layer.
//!
//! [`prepare`] does everything that does not depend on the conformal
//! parameters: data, split, learner fits, Venn-Abers scores and the
//! evaluation filter. [`run_method`] re-executes only the conformal layer, so
//! ablation grids share one [`Prepared`].

use super::config::{DataSource, EvalFilter, ExperimentConfig};
use crate::conformal::{
    continuous_cascade_calibrate_with_floor, mondrian_calibrate, naive_calibrate, split_calibrate, CalibrationSummary,
    CvPlus, JackknifeAfterBootstrap, Method, PredictionInterval,
};
use crate::datagen::{generate_cohort, split_cohort, Cohort, GenConfig};
use crate::error::{CascadeError, Result};
use crate::features::{FeatureMatrix, Standardizer};
use crate::learners::{load_predictions, PredictionRow, PredictionTable, RegressorConfig, SplitTag};
use crate::metrics::{youden_threshold, YoudenCut};
use crate::par::{self, ExecMode};
use crate::venn_abers::{VennAbersCalibrator, VennAbersOutput};

type RefitPredictor = dyn Fn(&str, &[f64], f64) -> Result<PredictionInterval> + Sync;

/// Features and regressor settings kept for methods that refit.
#[derive(Debug, Clone)]
pub struct RefitData {
    /// Every row, after the optional standardization.
    pub features: FeatureMatrix,
    /// Train rows with a nonzero target: the regressor's training set.
    pub train_rows: Vec<usize>,
    pub regressor: RegressorConfig,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub ids: Vec<String>,
    pub split: Vec<SplitTag>,
    pub y: Vec<f64>,
    pub labels: Vec<u8>,
    pub reg_pred: Vec<f64>,
    pub clf_score: Vec<f64>,
    /// Venn-Abers output for calibration and test rows; calibration rows are
    /// scored leave-one-out against the rest of the calibration split.
    pub va: Vec<Option<VennAbersOutput>>,
    /// Youden cut on calibration-split scores; `None` if that split lacks a
    /// class or has a single distinct score.
    pub youden: Option<YoudenCut>,
    pub filter: EvalFilter,
    pub eval_train: Vec<usize>,
    pub eval_cal: Vec<usize>,
    pub eval_test: Vec<usize>,
    pub refit: Option<RefitData>,
}

impl Prepared {
    pub fn u(&self, i: usize) -> f64 {
        self.va[i].map_or(f64::NAN, |v| v.u)
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    /// FNV-1a over the bit patterns of every learner output and Venn-Abers
    /// value, for asserting that a stage was not re-executed.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for i in 0..self.n_rows() {
            eat(self.reg_pred[i]);
            eat(self.clf_score[i]);
            if let Some(v) = self.va[i] {
                eat(v.p0);
                eat(v.p1);
            }
        }
        h
    }
}

/// Conformal-layer parameters; everything a grid point may vary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalParams {
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub sigma_floor: f64,
    pub cv_folds: usize,
    pub jab_bootstrap: usize,
    pub seed: u64,
    pub mode: ExecMode,
}

impl ConformalParams {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        ConformalParams {
            alpha: cfg.alpha,
            beta: cfg.beta,
            k: cfg.k,
            sigma_floor: cfg.conformal.sigma_floor,
            cv_folds: cfg.conformal.cv_folds,
            jab_bootstrap: cfg.conformal.jab_bootstrap,
            seed: cfg.seed,
            mode: cfg.exec,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    /// Aligned with `Prepared::eval_test`.
    pub intervals: Vec<PredictionInterval>,
    /// Absent for the cross-fitting methods.
    pub summary: Option<CalibrationSummary>,
}

/// Generator settings for an experiment: the experiment seed wins.
pub fn generator_config(cfg: &ExperimentConfig) -> GenConfig {
    GenConfig {
        seed: cfg.seed,
        ..cfg.data.generator.clone()
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let path = || cfg.data.path.clone().expect("validated");
    match cfg.data.source {
        DataSource::Generate => prepare_cohort(cfg, generate_cohort(&generator_config(cfg))?),
        DataSource::Cohort => {
            let p = path();
            let file = std::fs::File::open(&p).map_err(|e| CascadeError::io(&p, e))?;
            let cohort = Cohort::read_csv(file).map_err(|e| e.context(format!("cohort file {}", p.display())))?;
            prepare_cohort(cfg, cohort)
        }
        DataSource::Predictions => {
            let p = path();
            let table = load_predictions(&p).map_err(|e| e.context(format!("prediction file {}", p.display())))?;
            prepare_table(cfg, table)
        }
    }
}

fn prepare_cohort(cfg: &ExperimentConfig, cohort: Cohort) -> Result<Prepared> {
    let n = cohort.len();
    let mode = cfg.exec;
    let idx = split_cohort(n, cfg.data.cal_fraction, cfg.data.test_fraction, cfg.seed)?;
    let mut split = vec![SplitTag::Train; n];
    for &i in &idx.cal {
        split[i] = SplitTag::Cal;
    }
    for &i in &idx.test {
        split[i] = SplitTag::Test;
    }
    let features = if cfg.learners.standardize {
        Standardizer::fit(&cohort.features.select(&idx.train)).transform(&cohort.features)
    } else {
        cohort.features.clone()
    };

    let train_labels: Vec<u8> = idx.train.iter().map(|&i| cohort.change_label[i]).collect();
    let classifier = cfg
        .learners
        .classifier
        .fit(&features.select(&idx.train), &train_labels)
        .map_err(|e| e.context("stage-1 classifier"))?;
    let train_rows: Vec<usize> = idx.train.iter().copied().filter(|&i| cohort.target[i] != 0.0).collect();
    let train_y: Vec<f64> = train_rows.iter().map(|&i| cohort.target[i]).collect();
    let regressor = cfg
        .learners
        .regressor
        .fit(&features.select(&train_rows), &train_y)
        .map_err(|e| e.context("stage-2 regressor"))?;

    let reg_pred = regressor.predict_all(&features, mode);
    let clf_score = classifier.score_all(&features, mode);
    let table = PredictionTable {
        rows: (0..n)
            .map(|i| PredictionRow {
                id: cohort.ids[i].clone(),
                split: split[i],
                y: cohort.target[i],
                change_label: cohort.change_label[i],
                reg_pred: reg_pred[i],
                clf_score: clf_score[i],
            })
            .collect(),
    };
    let mut prepared = prepare_table(cfg, table)?;
    prepared.refit = Some(RefitData {
        features,
        train_rows,
        regressor: cfg.learners.regressor.clone(),
    });
    Ok(prepared)
}

fn prepare_table(cfg: &ExperimentConfig, table: PredictionTable) -> Result<Prepared> {
    table.require_splits()?;
    let n = table.len();
    let rows = &table.rows;
    let cal = table.indices(SplitTag::Cal);

    let cal_scores: Vec<f64> = cal.iter().map(|&i| rows[i].clf_score).collect();
    let cal_labels: Vec<u8> = cal.iter().map(|&i| rows[i].change_label).collect();
    let calibrator =
        VennAbersCalibrator::new(&cal_scores, &cal_labels).map_err(|e| e.context("Venn-Abers calibration"))?;
    let va = par::try_map_indexed(cfg.exec, n, |i| match rows[i].split {
        SplitTag::Train => Ok(None),
        SplitTag::Cal => calibrator
            .predict_leave_one_out(rows[i].clf_score, rows[i].change_label)
            .map(Some),
        SplitTag::Test => calibrator.predict(rows[i].clf_score).map(Some),
    })?;

    let youden = youden_threshold(&cal_scores, &cal_labels).ok();
    let keep = |i: usize| -> Result<bool> {
        Ok(match cfg.filter {
            EvalFilter::Truth => rows[i].y != 0.0,
            EvalFilter::Predicted => {
                let cut = youden.ok_or_else(|| {
                    CascadeError::config(
                        "filter",
                        "the predicted filter needs both classes and two distinct scores in the calibration split",
                    )
                })?;
                rows[i].clf_score > cut.threshold
            }
        })
    };
    let mut eval = [Vec::new(), Vec::new(), Vec::new()];
    for i in 0..n {
        if keep(i)? {
            eval[rows[i].split as usize].push(i);
        }
    }
    let [eval_train, eval_cal, eval_test] = eval;
    if eval_cal.is_empty() || eval_test.is_empty() {
        return Err(CascadeError::config(
            "filter",
            format!(
                "the {} filter leaves {} calibration and {} test rows; both must be nonempty",
                cfg.filter.as_str(),
                eval_cal.len(),
                eval_test.len()
            ),
        ));
    }

    Ok(Prepared {
        ids: rows.iter().map(|r| r.id.clone()).collect(),
        split: rows.iter().map(|r| r.split).collect(),
        y: rows.iter().map(|r| r.y).collect(),
        labels: rows.iter().map(|r| r.change_label).collect(),
        reg_pred: rows.iter().map(|r| r.reg_pred).collect(),
        clf_score: rows.iter().map(|r| r.clf_score).collect(),
        va,
        youden,
        filter: cfg.filter,
        eval_train,
        eval_cal,
        eval_test,
        refit: None,
    })
}

fn residuals(p: &Prepared, rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&i| (p.y[i] - p.reg_pred[i]).abs()).collect()
}

fn predict_all(p: &Prepared, summary: &CalibrationSummary, mode: ExecMode) -> Vec<PredictionInterval> {
    par::map_indexed(mode, p.eval_test.len(), |j| {
        let i = p.eval_test[j];
        summary.predict(&p.ids[i], p.reg_pred[i], p.u(i))
    })
}

fn refit_data(p: &Prepared, method: Method) -> Result<&RefitData> {
    p.refit.as_ref().ok_or_else(|| {
        CascadeError::config(
            "methods",
            format!("{method} needs features; it cannot run on a prediction table"),
        )
    })
}

/// One method's intervals on the evaluation test rows.
pub fn run_method(p: &Prepared, method: Method, params: &ConformalParams) -> Result<MethodRun> {
    let mode = params.mode;
    let cal_res = residuals(p, &p.eval_cal);
    let cal_u: Vec<f64> = p.eval_cal.iter().map(|&i| p.u(i)).collect();
    let run = |summary: CalibrationSummary| MethodRun {
        method,
        intervals: predict_all(p, &summary, mode),
        summary: Some(summary),
    };
    let result = match method {
        Method::Split => split_calibrate(&cal_res, params.alpha).map(run),
        Method::Naive => {
            if p.eval_train.is_empty() {
                Err(CascadeError::config(
                    "methods",
                    "naive needs training rows that pass the filter",
                ))
            } else {
                naive_calibrate(&residuals(p, &p.eval_train), params.alpha).map(run)
            }
        }
        Method::Mondrian => mondrian_calibrate(&cal_res, &cal_u, params.k, params.alpha).map(run),
        Method::Cascade => {
            continuous_cascade_calibrate_with_floor(&cal_res, &cal_u, params.beta, params.alpha, params.sigma_floor)
                .map(run)
        }
        Method::CvPlus | Method::Jab => {
            let data = refit_data(p, method)?;
            let x = data.features.select(&data.train_rows);
            let y: Vec<f64> = data.train_rows.iter().map(|&i| p.y[i]).collect();
            let predictor: Box<RefitPredictor> = if method == Method::CvPlus {
                let cv = CvPlus::calibrate(
                    &x,
                    &y,
                    &data.regressor,
                    params.cv_folds,
                    params.alpha,
                    params.seed,
                    mode,
                )?;
                Box::new(move |id, xr, u| cv.predict(id, xr, u))
            } else {
                let jab = JackknifeAfterBootstrap::calibrate(
                    &x,
                    &y,
                    &data.regressor,
                    params.jab_bootstrap,
                    params.alpha,
                    params.seed,
                    mode,
                )?;
                Box::new(move |id, xr, u| jab.predict(id, xr, u))
            };
            par::try_map_indexed(mode, p.eval_test.len(), |j| {
                let i = p.eval_test[j];
                predictor(&p.ids[i], data.features.row(i), p.u(i))
            })
            .map(|intervals| MethodRun {
                method,
                intervals,
                summary: None,
            })
        }
    };
    result.map_err(|e| e.context(format!("method {method}")))
}
