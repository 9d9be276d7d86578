use serde::{Deserialize, Serialize};

use crate::conformal::PredictionInterval;
use crate::error::{CascadeError, Result};

fn check_aligned(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(CascadeError::Argument(format!("{what}: {a} vs {b} entries")));
    }
    if a == 0 {
        return Err(CascadeError::Argument(format!("{what}: empty input")));
    }
    Ok(())
}

/// Mean that returns the common value exactly when all entries agree.
pub(crate) fn mean_exact(v: &[f64]) -> f64 {
    match v.first() {
        Some(&first) if v.iter().all(|x| *x == first) => first,
        _ => v.iter().sum::<f64>() / v.len() as f64,
    }
}

/// Fraction of truths inside their closed interval.
pub fn marginal_coverage(intervals: &[PredictionInterval], truths: &[f64]) -> Result<f64> {
    check_aligned(intervals.len(), truths.len(), "marginal_coverage")?;
    let hit = intervals.iter().zip(truths).filter(|(iv, y)| iv.contains(**y)).count();
    Ok(hit as f64 / truths.len() as f64)
}

/// Interval score: length plus `2/alpha` times the distance to the interval
/// for misses.
pub fn winkler_score(lower: f64, upper: f64, truth: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CascadeError::Argument(format!("alpha = {alpha} outside (0, 1)")));
    }
    if lower > upper {
        return Err(CascadeError::Argument(format!("inverted interval [{lower}, {upper}]")));
    }
    let penalty = if truth < lower {
        (2.0 / alpha) * (lower - truth)
    } else if truth > upper {
        (2.0 / alpha) * (truth - upper)
    } else {
        0.0
    };
    Ok((upper - lower) + penalty)
}

pub fn mean_winkler(intervals: &[PredictionInterval], truths: &[f64], alpha: f64) -> Result<f64> {
    check_aligned(intervals.len(), truths.len(), "winkler")?;
    let scores = intervals
        .iter()
        .zip(truths)
        .map(|(iv, &y)| winkler_score(iv.lower, iv.upper, y, alpha))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_exact(&scores))
}

/// Mean length over the top `1/K` uncertainty quantile divided by the mean
/// over the bottom `1/K`.
///
/// With `m = ceil(n / K)`, the bottom stratum is `u <= u_(m)` and the top
/// stratum is `u >= u_(n - m + 1)` (order statistics of the test `u`), so
/// `K = n` compares the single largest and smallest `u`. Returns `None` when
/// the ratio is undefined (zero or non-finite denominator or numerator).
pub fn cascade_ratio(lengths: &[f64], u: &[f64], k: usize) -> Result<Option<f64>> {
    check_aligned(lengths.len(), u.len(), "cascade_ratio")?;
    if k < 2 {
        return Err(CascadeError::Argument(format!("K = {k} must be at least 2")));
    }
    let n = u.len();
    let mut sorted = u.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = n.div_ceil(k);
    let (lo_thr, hi_thr) = (sorted[m - 1], sorted[n - m]);
    let bottom: Vec<f64> = lengths
        .iter()
        .zip(u)
        .filter(|(_, &v)| v <= lo_thr)
        .map(|(l, _)| *l)
        .collect();
    let top: Vec<f64> = lengths
        .iter()
        .zip(u)
        .filter(|(_, &v)| v >= hi_thr)
        .map(|(l, _)| *l)
        .collect();
    if bottom.is_empty() || top.is_empty() {
        return Ok(None);
    }
    let (num, den) = (mean_exact(&top), mean_exact(&bottom));
    if !(num.is_finite() && den.is_finite()) || den <= 0.0 {
        return Ok(None);
    }
    Ok(Some(num / den))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumRow {
    /// Quantile range label, e.g. `q0.000-0.333`.
    pub stratum: String,
    pub n: usize,
    #[serde(with = "crate::numfmt::report_opt_f64")]
    pub coverage: Option<f64>,
    #[serde(with = "crate::numfmt::report_opt_f64")]
    pub avg_length: Option<f64>,
}

/// Stratum index of each `u` under `K` quantile strata of the same sample.
/// Edges are the `ceil(j n / K)`-th order statistics; ties can leave a
/// stratum empty.
pub fn strata_of(u: &[f64], k: usize) -> Vec<usize> {
    let mut sorted = u.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let edges: Vec<f64> = (1..k).map(|j| sorted[(j * n).div_ceil(k) - 1]).collect();
    u.iter().map(|v| edges.partition_point(|e| e < v)).collect()
}

pub fn stratum_label(j: usize, k: usize) -> String {
    format!("q{:.3}-{:.3}", j as f64 / k as f64, (j + 1) as f64 / k as f64)
}

/// Coverage and mean length per `u`-quantile stratum, lowest first.
pub fn stratified_rows(
    intervals: &[PredictionInterval],
    truths: &[f64],
    u: &[f64],
    k: usize,
) -> Result<Vec<StratumRow>> {
    check_aligned(intervals.len(), truths.len(), "stratified_rows")?;
    check_aligned(intervals.len(), u.len(), "stratified_rows")?;
    if k < 2 {
        return Err(CascadeError::Argument(format!("K = {k} must be at least 2")));
    }
    let strata = strata_of(u, k);
    Ok((0..k)
        .map(|j| {
            let idx: Vec<usize> = (0..u.len()).filter(|&i| strata[i] == j).collect();
            let (coverage, avg_length) = if idx.is_empty() {
                (None, None)
            } else {
                let hits = idx.iter().filter(|&&i| intervals[i].contains(truths[i])).count();
                let lens: Vec<f64> = idx.iter().map(|&i| intervals[i].length).collect();
                (Some(hits as f64 / idx.len() as f64), Some(mean_exact(&lens)))
            };
            StratumRow {
                stratum: stratum_label(j, k),
                n: idx.len(),
                coverage,
                avg_length,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::Method;

    fn iv(lower: f64, upper: f64) -> PredictionInterval {
        PredictionInterval {
            id: String::new(),
            center: (lower + upper) / 2.0,
            lower,
            upper,
            length: upper - lower,
            sigma: 1.0,
            u_va: 0.0,
            method: Method::Split,
        }
    }

    #[test]
    fn coverage_counts_closed_bounds() {
        let ivs = vec![iv(0.0, 1.0); 4];
        assert_eq!(marginal_coverage(&ivs, &[0.5, 0.2, 0.9, 0.1]).unwrap(), 1.0);
        assert_eq!(marginal_coverage(&ivs[..1], &[1.0]).unwrap(), 1.0);
        assert_eq!(marginal_coverage(&ivs, &[0.5, 2.0, 0.0, 1.0]).unwrap(), 0.75);
        assert!(marginal_coverage(&ivs, &[0.5]).is_err());
    }

    #[test]
    fn winkler_cases() {
        assert_eq!(winkler_score(0.0, 1.0, 0.5, 0.2).unwrap(), 1.0);
        assert!((winkler_score(0.0, 1.0, 1.2, 0.2).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(winkler_score(0.0, 1.0, 1.0, 0.2).unwrap(), 1.0);
        assert!((winkler_score(0.0, 1.0, -0.1, 0.2).unwrap() - 2.0).abs() < 1e-12);
        assert!(winkler_score(0.0, 1.0, 0.5, 1.0).is_err());
        assert!(winkler_score(1.0, 0.0, 0.5, 0.2).is_err());
    }

    #[test]
    fn ratio_of_constant_lengths_is_one() {
        let lens = vec![0.1; 10];
        let u: Vec<f64> = (0..10).map(|i| i as f64 * 0.37 % 1.0).collect();
        assert_eq!(cascade_ratio(&lens, &u, 3).unwrap(), Some(1.0));
    }

    #[test]
    fn ratio_with_one_point_strata() {
        let u = [0.3, 0.1, 0.7, 0.5];
        let lens = [3.0, 1.0, 7.0, 5.0];
        assert_eq!(cascade_ratio(&lens, &u, 4).unwrap(), Some(7.0));
    }

    #[test]
    fn ratio_undefined_when_bottom_is_zero() {
        assert_eq!(cascade_ratio(&[0.0, 1.0, 2.0], &[0.1, 0.2, 0.3], 3).unwrap(), None);
    }

    #[test]
    fn strata_rows_label_and_fill() {
        let u: Vec<f64> = (0..9).map(f64::from).collect();
        let ivs: Vec<_> = (0..9).map(|i| iv(0.0, f64::from(i / 3 + 1))).collect();
        let rows = stratified_rows(&ivs, &[0.5; 9], &u, 3).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].stratum, "q0.000-0.333");
        assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![3, 3, 3]);
        assert_eq!(rows[2].avg_length, Some(3.0));
        // all-tied u leaves upper strata empty
        let rows = stratified_rows(&ivs, &[0.5; 9], &[1.0; 9], 3).unwrap();
        assert_eq!(rows[0].n, 9);
        assert_eq!(rows[1].coverage, None);
    }
}
