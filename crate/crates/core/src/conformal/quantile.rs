use crate::error::{CascadeError, Result};

// Guards ceil/floor against products like 5 * 0.8 landing a hair above 4.
const RANK_EPS: f64 = 1e-9;

/// `k`-th smallest (1-based) of `values`.
pub fn kth_smallest(values: &[f64], k: usize) -> f64 {
    debug_assert!(k >= 1 && k <= values.len());
    let mut buf = values.to_vec();
    let (_, v, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    *v
}

fn check_scores(scores: &[f64], alpha: f64) -> Result<()> {
    if scores.is_empty() {
        return Err(CascadeError::Argument("quantile of an empty score set".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CascadeError::Argument(format!("alpha = {alpha} outside (0, 1)")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(CascadeError::Argument("scores contain NaN".into()));
    }
    Ok(())
}

/// Rank `ceil((n + 1)(1 - alpha))` used by the finite-sample correction.
pub fn conformal_rank(n: usize, alpha: f64) -> usize {
    (((n + 1) as f64 * (1.0 - alpha)) - RANK_EPS).ceil().max(1.0) as usize
}

/// Rank `floor((n + 1) alpha)` for lower jackknife+ style bounds (0 means
/// the bound is unbounded).
pub fn lower_rank(n: usize, alpha: f64) -> usize {
    ((n + 1) as f64 * alpha + RANK_EPS).floor() as usize
}

/// The `ceil((n+1)(1-alpha))`-th smallest score, or `+inf` when that rank
/// exceeds `n`.
pub fn conformal_quantile(scores: &[f64], alpha: f64) -> Result<f64> {
    check_scores(scores, alpha)?;
    let k = conformal_rank(scores.len(), alpha);
    if k > scores.len() {
        return Ok(f64::INFINITY);
    }
    Ok(kth_smallest(scores, k))
}

/// Plain empirical `(1 - alpha)` quantile without the `+1` correction: the
/// smallest order statistic whose ECDF value reaches `1 - alpha`, i.e. the
/// `ceil(n(1 - alpha))`-th smallest. No interpolation.
pub fn empirical_quantile(scores: &[f64], alpha: f64) -> Result<f64> {
    check_scores(scores, alpha)?;
    let n = scores.len();
    let k = ((n as f64 * (1.0 - alpha)) - RANK_EPS).ceil().clamp(1.0, n as f64) as usize;
    Ok(kth_smallest(scores, k))
}
