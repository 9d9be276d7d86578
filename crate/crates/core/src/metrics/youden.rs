use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoudenCut {
    /// Scores strictly above the threshold are predicted positive.
    pub threshold: f64,
    /// Sensitivity + specificity - 1 at the threshold.
    pub j: f64,
}

/// Threshold maximizing Youden's J over midpoints of consecutive distinct
/// scores; ties go to the lowest threshold.
pub fn youden_threshold(scores: &[f64], labels: &[u8]) -> Result<YoudenCut> {
    if scores.len() != labels.len() {
        return Err(CascadeError::Argument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) || labels.iter().any(|&l| l > 1) {
        return Err(CascadeError::Argument(
            "scores must not be NaN and labels must be 0/1".into(),
        ));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(CascadeError::Argument("Youden's J needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // walk the cuts upward; below-cut counts grow as groups are passed
    let (mut pos_below, mut neg_below) = (0usize, 0usize);
    let mut best: Option<YoudenCut> = None;
    let mut i = 0;
    while i < order.len() {
        let v = scores[order[i]];
        while i < order.len() && scores[order[i]] == v {
            if labels[order[i]] == 1 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            i += 1;
        }
        let Some(&next) = order.get(i) else { break };
        let threshold = v + (scores[next] - v) / 2.0;
        let tpr = (pos - pos_below) as f64 / pos as f64;
        let fpr = (neg - neg_below) as f64 / neg as f64;
        let j = tpr - fpr;
        if best.is_none_or(|b| j > b.j) {
            best = Some(YoudenCut { threshold, j });
        }
    }
    best.ok_or_else(|| CascadeError::Argument("all scores are equal; no threshold separates them".into()))
}
