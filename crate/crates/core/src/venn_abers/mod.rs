//! Inductive Venn-Abers predictors.
//!
//! For a test score the calibration multiset is augmented twice, once with
//! the test point labelled 0 and once labelled 1. Each augmented set gets an
//! isotonic fit of label on score; `p0` and `p1` are the fitted values at the
//! test score, and their gap `u = p1 - p0` is the epistemic uncertainty.
//!
//! Equal scores always share one pooled block, including the appended test
//! point, so the output depends on scores only through their order.

mod pava;

pub use pava::{pava, IsotonicFit};

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::par::{self, ExecMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VennAbersOutput {
    pub p0: f64,
    pub p1: f64,
    pub u: f64,
}

/// `p1 - p0`; rejects inverted or out-of-range pairs.
pub fn uncertainty_score(p0: f64, p1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p0) || !(0.0..=1.0).contains(&p1) {
        return Err(CascadeError::Argument(format!(
            "probabilities ({p0}, {p1}) outside [0, 1]"
        )));
    }
    if p0 > p1 {
        return Err(CascadeError::Argument(format!("p0 = {p0} exceeds p1 = {p1}")));
    }
    Ok(p1 - p0)
}

/// Calibration scores grouped by distinct value.
#[derive(Debug, Clone, PartialEq)]
pub struct VennAbersCalibrator {
    scores: Vec<f64>,
    counts: Vec<f64>,
    positives: Vec<f64>,
}

impl VennAbersCalibrator {
    pub fn new(cal_scores: &[f64], cal_labels: &[u8]) -> Result<Self> {
        if cal_scores.is_empty() {
            return Err(CascadeError::Argument(
                "Venn-Abers needs a nonempty calibration set".into(),
            ));
        }
        if cal_scores.len() != cal_labels.len() {
            return Err(CascadeError::Argument(format!(
                "{} calibration scores but {} labels",
                cal_scores.len(),
                cal_labels.len()
            )));
        }
        if cal_labels.iter().any(|&l| l > 1) {
            return Err(CascadeError::Argument("calibration labels must be 0 or 1".into()));
        }
        if cal_scores.iter().any(|s| !s.is_finite()) {
            return Err(CascadeError::Argument("calibration scores must be finite".into()));
        }
        let mut order: Vec<usize> = (0..cal_scores.len()).collect();
        order.sort_by(|&a, &b| cal_scores[a].total_cmp(&cal_scores[b]));
        let (mut scores, mut counts, mut positives) = (Vec::new(), Vec::new(), Vec::new());
        for i in order {
            let l = f64::from(cal_labels[i]);
            if scores.last() == Some(&cal_scores[i]) {
                *counts.last_mut().unwrap() += 1.0;
                *positives.last_mut().unwrap() += l;
            } else {
                scores.push(cal_scores[i]);
                counts.push(1.0);
                positives.push(l);
            }
        }
        Ok(VennAbersCalibrator {
            scores,
            counts,
            positives,
        })
    }

    pub fn n_calibration(&self) -> usize {
        self.counts.iter().sum::<f64>() as usize
    }

    pub fn predict(&self, test_score: f64) -> Result<VennAbersOutput> {
        self.predict_adjusted(test_score, None)
    }

    /// Prediction for a calibration member: one observation with this score
    /// and label is removed before augmenting, so the point never sees itself.
    pub fn predict_leave_one_out(&self, score: f64, label: u8) -> Result<VennAbersOutput> {
        self.predict_adjusted(score, Some(label))
    }

    pub fn predict_many(&self, scores: &[f64], mode: ExecMode) -> Result<Vec<VennAbersOutput>> {
        par::try_map_indexed(mode, scores.len(), |i| self.predict(scores[i]))
    }

    fn predict_adjusted(&self, test_score: f64, removed: Option<u8>) -> Result<VennAbersOutput> {
        if !test_score.is_finite() {
            return Err(CascadeError::Argument(format!("test score {test_score} is not finite")));
        }
        let pos = self.scores.partition_point(|s| *s < test_score);
        let tied = self.scores.get(pos) == Some(&test_score);
        let mut items: Vec<(f64, f64)> = Vec::with_capacity(self.scores.len() + 1);
        items.extend(self.counts.iter().zip(&self.positives).map(|(&c, &p)| (c, p)));
        if let Some(label) = removed {
            if !tied {
                return Err(CascadeError::Argument(format!(
                    "score {test_score} is not a calibration score"
                )));
            }
            let (c, p) = &mut items[pos];
            let l = f64::from(label);
            if *p < l || *c - *p < 1.0 - l {
                return Err(CascadeError::Argument(format!(
                    "no calibration point with score {test_score} and label {label}"
                )));
            }
            *c -= 1.0;
            *p -= l;
            if *c == 0.0 {
                items.remove(pos);
                return self.augmented(items, pos, false);
            }
        }
        self.augmented(items, pos, tied)
    }

    fn augmented(&self, mut items: Vec<(f64, f64)>, pos: usize, tied: bool) -> Result<VennAbersOutput> {
        if items.is_empty() {
            return Err(CascadeError::Argument(
                "Venn-Abers calibration set is empty after leave-one-out".into(),
            ));
        }
        if !tied {
            items.insert(pos, (0.0, 0.0));
        }
        let mut with_label = |label: f64| {
            items[pos].0 += 1.0;
            items[pos].1 += label;
            let v = pava::pooled_value_at(&items, pos).clamp(0.0, 1.0);
            items[pos].0 -= 1.0;
            items[pos].1 -= label;
            v
        };
        let p0 = with_label(0.0);
        let p1 = with_label(1.0);
        Ok(VennAbersOutput {
            p0,
            p1,
            u: uncertainty_score(p0, p1)?,
        })
    }
}

/// One-shot inductive Venn-Abers prediction for a single test score.
pub fn venn_abers_predict(cal_scores: &[f64], cal_labels: &[u8], test_score: f64) -> Result<VennAbersOutput> {
    VennAbersCalibrator::new(cal_scores, cal_labels)?.predict(test_score)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_pair() {
        let out = venn_abers_predict(&[0.1, 0.9], &[0, 1], 0.5).unwrap();
        assert_eq!((out.p0, out.p1, out.u), (0.0, 1.0, 1.0));
    }

    #[test]
    fn pooled_two_thirds() {
        let out = venn_abers_predict(&[0.5, 0.6], &[1, 1], 0.7).unwrap();
        assert_eq!(out.p1, 1.0);
        assert!((out.p0 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tied_test_score_joins_block() {
        // calibration block at 0.5 holds labels {0, 1}; the test point joins it
        let out = venn_abers_predict(&[0.5, 0.5, 0.9], &[0, 1, 1], 0.5).unwrap();
        assert!((out.p0 - 1.0 / 3.0).abs() < 1e-15);
        assert!((out.p1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn leave_one_out_matches_fresh_calibration() {
        let scores = [0.1, 0.4, 0.4, 0.7, 0.8, 0.95];
        let labels = [0, 0, 1, 0, 1, 1];
        let cal = VennAbersCalibrator::new(&scores, &labels).unwrap();
        for i in 0..scores.len() {
            let rest_s: Vec<f64> = (0..6).filter(|&j| j != i).map(|j| scores[j]).collect();
            let rest_l: Vec<u8> = (0..6).filter(|&j| j != i).map(|j| labels[j]).collect();
            let fresh = venn_abers_predict(&rest_s, &rest_l, scores[i]).unwrap();
            let loo = cal.predict_leave_one_out(scores[i], labels[i]).unwrap();
            assert_eq!(fresh, loo, "point {i}");
        }
        assert!(cal.predict_leave_one_out(0.1, 1).is_err());
        assert!(cal.predict_leave_one_out(0.2, 0).is_err());
    }

    #[test]
    fn uncertainty_score_cases() {
        assert_eq!(uncertainty_score(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(uncertainty_score(0.0, 1.0).unwrap(), 1.0);
        assert!((uncertainty_score(0.40, 0.55).unwrap() - 0.15).abs() < 1e-15);
        assert!(uncertainty_score(0.6, 0.5).is_err());
    }

    #[test]
    fn errors() {
        assert!(venn_abers_predict(&[], &[], 0.5).is_err());
        assert!(venn_abers_predict(&[0.1], &[2], 0.5).is_err());
    }
}
