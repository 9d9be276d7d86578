use serde::{Deserialize, Serialize};

use super::{conformal_quantile, CalibrationSummary, Method, PredictionInterval};
use crate::error::{CascadeError, Result};

/// Per-stratum calibration state. Stratum `k` holds `u` with
/// `edges[k-1] < u <= edges[k]`; values outside the calibration range clamp
/// to the first or last stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MondrianBins {
    pub edges: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub counts: Vec<usize>,
    /// Number of strata requested before tied edges were merged.
    pub requested: usize,
}

impl MondrianBins {
    pub fn n_strata(&self) -> usize {
        self.counts.len()
    }

    pub fn quantile_for(&self, u: f64) -> f64 {
        self.quantiles[bin_of(&self.edges, u)]
    }
}

pub fn bin_of(edges: &[f64], u: f64) -> usize {
    edges.partition_point(|e| *e < u)
}

/// Interior `K`-quantile edges of `values`: the `ceil(j n / K)`-th order
/// statistics for `j = 1..K`. Duplicate edges are merged and an edge at the
/// maximum (which would leave an empty top stratum) is dropped.
pub fn quantile_edges(values: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let Some(&max) = sorted.last() else {
        return Vec::new();
    };
    let mut edges: Vec<f64> = Vec::with_capacity(k.saturating_sub(1));
    for j in 1..k {
        let rank = (j * n).div_ceil(k);
        let e = sorted[rank - 1];
        if e < max && edges.last() != Some(&e) {
            edges.push(e);
        }
    }
    edges
}

pub fn mondrian_calibrate(
    cal_residuals: &[f64],
    cal_u: &[f64],
    k_bins: usize,
    alpha: f64,
) -> Result<CalibrationSummary> {
    if k_bins < 2 {
        return Err(CascadeError::config("k", format!("K = {k_bins} must be at least 2")));
    }
    if cal_residuals.len() != cal_u.len() {
        return Err(CascadeError::Argument(format!(
            "{} residuals but {} uncertainty scores",
            cal_residuals.len(),
            cal_u.len()
        )));
    }
    if cal_residuals.len() < k_bins {
        return Err(CascadeError::Stratification(format!(
            "{} calibration points cannot fill {k_bins} strata; use a smaller K",
            cal_residuals.len()
        )));
    }
    if cal_u.iter().any(|u| u.is_nan()) {
        return Err(CascadeError::Argument("uncertainty scores contain NaN".into()));
    }
    let edges = quantile_edges(cal_u, k_bins);
    let n_strata = edges.len() + 1;
    if n_strata < k_bins {
        log::warn!("tied uncertainty scores merged {k_bins} Mondrian strata into {n_strata}");
    }
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); n_strata];
    for (&r, &u) in cal_residuals.iter().zip(cal_u) {
        members[bin_of(&edges, u)].push(r);
    }
    if let Some(k) = members.iter().position(Vec::is_empty) {
        return Err(CascadeError::Stratification(format!(
            "stratum {k} is empty after the quantile split; use a smaller K"
        )));
    }
    let quantiles = members
        .iter()
        .map(|m| conformal_quantile(m, alpha))
        .collect::<Result<Vec<_>>>()?;
    let counts = members.iter().map(Vec::len).collect();
    Ok(CalibrationSummary {
        method: Method::Mondrian,
        alpha,
        residuals: cal_residuals.to_vec(),
        sigmas: vec![1.0; cal_residuals.len()],
        scaled_scores: cal_residuals.to_vec(),
        quantile: conformal_quantile(cal_residuals, alpha)?,
        scaling: None,
        bins: Some(MondrianBins {
            edges,
            quantiles,
            counts,
            requested: k_bins,
        }),
    })
}

pub fn mondrian_cascade(
    cal_residuals: &[f64],
    cal_u: &[f64],
    test_u: f64,
    f_hat_new: f64,
    k_bins: usize,
    alpha: f64,
) -> Result<PredictionInterval> {
    Ok(mondrian_calibrate(cal_residuals, cal_u, k_bins, alpha)?.predict("", f_hat_new, test_u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::split_conformal;

    #[test]
    fn two_bins_hand_case() {
        let r = [1.0, 1.0, 5.0, 5.0];
        let u = [0.1, 0.1, 0.9, 0.9];
        // two points per bin: alpha = 0.4 gives rank ceil(3 * 0.6) = 2
        let low = mondrian_cascade(&r, &u, 0.05, 0.0, 2, 0.4).unwrap();
        let high = mondrian_cascade(&r, &u, 0.95, 0.0, 2, 0.4).unwrap();
        assert_eq!((low.lower, low.upper), (-1.0, 1.0));
        assert_eq!((high.lower, high.upper), (-5.0, 5.0));
        assert!(high.length > low.length);
        // at alpha = 0.2 two points are too few and both bins are unbounded
        let q = mondrian_calibrate(&r, &u, 2, 0.2).unwrap();
        assert_eq!(q.bins.unwrap().quantiles, vec![f64::INFINITY; 2]);
    }

    #[test]
    fn identical_u_collapses_to_split() {
        let r: Vec<f64> = (1..=20).map(f64::from).collect();
        let u = vec![0.3; 20];
        let s = mondrian_calibrate(&r, &u, 3, 0.2).unwrap();
        assert_eq!(s.bins.as_ref().unwrap().n_strata(), 1);
        let m = s.predict("a", 2.0, 0.7);
        let sp = split_conformal(&r, 0.2, 2.0).unwrap();
        assert_eq!(m.length, sp.length);
    }

    #[test]
    fn distinct_u_balanced_counts() {
        for k in [3, 5, 7] {
            for n in [100, 101, 1000, 997] {
                let u: Vec<f64> = (0..n).map(|i| ((i * 7919) % n) as f64).collect();
                let s = mondrian_calibrate(&vec![1.0; n], &u, k, 0.2).unwrap();
                let bins = s.bins.unwrap();
                assert_eq!(bins.n_strata(), k);
                for c in bins.counts {
                    assert!(c.abs_diff(n / k) <= 1, "n={n} k={k} count={c}");
                }
            }
        }
    }

    #[test]
    fn out_of_range_clamps() {
        let edges = [0.2, 0.5];
        assert_eq!(bin_of(&edges, -1.0), 0);
        assert_eq!(bin_of(&edges, 0.2), 0);
        assert_eq!(bin_of(&edges, 0.3), 1);
        assert_eq!(bin_of(&edges, 9.0), 2);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            mondrian_calibrate(&[1.0, 2.0], &[0.1, 0.2], 3, 0.2),
            Err(CascadeError::Stratification(_))
        ));
        assert!(matches!(
            mondrian_calibrate(&[1.0, 2.0], &[0.1, 0.2], 1, 0.2),
            Err(CascadeError::Config { .. })
        ));
    }
}
