use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};

/// A pooled block: total weight, weighted sum, first member index.
#[derive(Debug, Clone, Copy)]
struct Block {
    weight: f64,
    sum: f64,
    start: usize,
}

impl Block {
    fn mean(&self) -> f64 {
        self.sum / self.weight
    }
}

/// Pool-adjacent-violators over `(weight, weighted_sum)` pairs. Returns the
/// pooled blocks in order.
fn pool(items: impl Iterator<Item = (f64, f64)>) -> Vec<Block> {
    let mut stack: Vec<Block> = Vec::new();
    for (start, (weight, sum)) in items.enumerate() {
        let mut cur = Block { weight, sum, start };
        while let Some(prev) = stack.last() {
            // prev.mean > cur.mean, cross-multiplied (weights are positive)
            if prev.sum * cur.weight > cur.sum * prev.weight {
                cur = Block {
                    weight: prev.weight + cur.weight,
                    sum: prev.sum + cur.sum,
                    start: prev.start,
                };
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(cur);
    }
    stack
}

/// Weighted isotonic (nondecreasing) least-squares fit of `values`.
pub fn pava(values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(CascadeError::Argument("pava needs a nonempty sequence".into()));
    }
    if values.len() != weights.len() {
        return Err(CascadeError::Argument(format!(
            "pava: {} values but {} weights",
            values.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(CascadeError::Argument(format!("pava: weight {w} is not positive")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CascadeError::Argument("pava: values must be finite".into()));
    }
    let blocks = pool(weights.iter().zip(values).map(|(&w, &v)| (w, w * v)));
    let mut out = Vec::with_capacity(values.len());
    for (b, next) in blocks
        .iter()
        .zip(blocks.iter().skip(1).map(|b| b.start).chain([values.len()]))
    {
        let m = b.mean();
        out.extend(std::iter::repeat_n(m, next - b.start));
    }
    Ok(out)
}

/// Pooled mean of the block that ends up containing item `target` after
/// pooling `(weight, weighted_sum)` items.
pub(crate) fn pooled_value_at(items: &[(f64, f64)], target: usize) -> f64 {
    let blocks = pool(items.iter().copied());
    let pos = blocks.partition_point(|b| b.start <= target) - 1;
    blocks[pos].mean()
}

/// Step-function isotonic fit over distinct sorted breakpoints. Equal
/// inputs are pooled into one weighted point before fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicFit {
    pub breakpoints: Vec<f64>,
    pub fitted_values: Vec<f64>,
}

impl IsotonicFit {
    pub fn fit(x: &[f64], y: &[f64], weights: &[f64]) -> Result<IsotonicFit> {
        if x.len() != y.len() || x.len() != weights.len() {
            return Err(CascadeError::Argument("isotonic fit: length mismatch".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CascadeError::Argument("isotonic fit: x must be finite".into()));
        }
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let mut breakpoints: Vec<f64> = Vec::new();
        let mut w = Vec::new();
        let mut s = Vec::new();
        for i in order {
            if breakpoints.last() == Some(&x[i]) {
                *w.last_mut().unwrap() += weights[i];
                *s.last_mut().unwrap() += weights[i] * y[i];
            } else {
                breakpoints.push(x[i]);
                w.push(weights[i]);
                s.push(weights[i] * y[i]);
            }
        }
        let means: Vec<f64> = s.iter().zip(&w).map(|(s, w)| s / w).collect();
        let fitted_values = pava(&means, &w)?;
        Ok(IsotonicFit {
            breakpoints,
            fitted_values,
        })
    }

    /// Value at the largest breakpoint not above `x` (first value below range).
    pub fn evaluate(&self, x: f64) -> f64 {
        let pos = self.breakpoints.partition_point(|b| *b <= x);
        self.fitted_values[pos.saturating_sub(1)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_input_unchanged() {
        assert_eq!(pava(&[1.0, 2.0, 3.0], &[1.0; 3]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn single_violation_pools() {
        assert_eq!(pava(&[1.0, 3.0, 2.0], &[1.0; 3]).unwrap(), vec![1.0, 2.5, 2.5]);
    }

    #[test]
    fn weighted_pool() {
        assert_eq!(pava(&[5.0, 1.0], &[1.0, 3.0]).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn cascading_merge() {
        // the last point drags both earlier blocks down
        assert_eq!(pava(&[2.0, 3.0, 0.0], &[1.0; 3]).unwrap(), vec![5.0 / 3.0; 3]);
    }

    #[test]
    fn argument_errors() {
        assert!(pava(&[], &[]).is_err());
        assert!(pava(&[1.0], &[1.0, 2.0]).is_err());
        assert!(pava(&[1.0, 2.0], &[1.0, 0.0]).is_err());
        assert!(pava(&[1.0, 2.0], &[1.0, -1.0]).is_err());
    }

    #[test]
    fn isotonic_fit_pools_ties_and_steps() {
        let fit = IsotonicFit::fit(&[0.2, 0.1, 0.2, 0.5], &[1.0, 0.0, 0.0, 1.0], &[1.0; 4]).unwrap();
        assert_eq!(fit.breakpoints, vec![0.1, 0.2, 0.5]);
        assert_eq!(fit.fitted_values, vec![0.0, 0.5, 1.0]);
        assert_eq!(fit.evaluate(0.05), 0.0);
        assert_eq!(fit.evaluate(0.3), 0.5);
        assert_eq!(fit.evaluate(9.0), 1.0);
    }

    #[test]
    fn pooled_value_lookup() {
        let items = [(1.0, 1.0), (1.0, 0.0), (1.0, 1.0)];
        assert_eq!(pooled_value_at(&items, 0), 0.5);
        assert_eq!(pooled_value_at(&items, 1), 0.5);
        assert_eq!(pooled_value_at(&items, 2), 1.0);
    }
}
