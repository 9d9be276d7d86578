use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::par::{self, ExecMode};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 1000,
            level: 0.95,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 200 {
            return Err(CascadeError::config(
                "bootstrap_b",
                format!("{} replicates; at least 200 are required", self.replicates),
            ));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(CascadeError::config("bootstrap_level", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    Median,
}

impl Statistic {
    pub fn apply(self, v: &[f64]) -> f64 {
        match self {
            Statistic::Mean => super::intervals::mean_exact(v),
            Statistic::Median => {
                let mut s = v.to_vec();
                s.sort_by(f64::total_cmp);
                let n = s.len();
                if n % 2 == 1 {
                    s[n / 2]
                } else {
                    (s[n / 2 - 1] + s[n / 2]) / 2.0
                }
            }
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn interpolate(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Percentile bootstrap over `n` resampled indices. `stat` receives the
/// resampled index set and may decline (`None`) for degenerate replicates;
/// those are skipped. Replicate `r` draws from its own seed-derived stream.
pub fn bootstrap_ci_by<F>(n: usize, stat: F, cfg: &BootstrapConfig, mode: ExecMode) -> Result<Option<(f64, f64)>>
where
    F: Fn(&[usize]) -> Option<f64> + Sync + Send,
{
    cfg.validate()?;
    if n == 0 {
        return Err(CascadeError::Argument("bootstrap of an empty sample".into()));
    }
    let base = rng::derive_seed(cfg.seed, rng::STREAM_BOOTSTRAP);
    let reps = par::map_indexed(mode, cfg.replicates, |r| {
        let mut g = rng::stream(base, r as u64);
        let idx: Vec<usize> = (0..n).map(|_| g.random_range(0..n)).collect();
        stat(&idx)
    });
    let mut vals: Vec<f64> = reps.into_iter().flatten().filter(|v| !v.is_nan()).collect();
    if vals.is_empty() {
        return Ok(None);
    }
    vals.sort_by(f64::total_cmp);
    let tail = (1.0 - cfg.level) / 2.0;
    Ok(Some((interpolate(&vals, tail), interpolate(&vals, 1.0 - tail))))
}

pub fn bootstrap_ci(values: &[f64], statistic: Statistic, cfg: &BootstrapConfig, mode: ExecMode) -> Result<(f64, f64)> {
    let ci = bootstrap_ci_by(
        values.len(),
        |idx| {
            let sample: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
            Some(statistic.apply(&sample))
        },
        cfg,
        mode,
    )?;
    ci.ok_or_else(|| CascadeError::Numerical("bootstrap produced no finite replicate".into()))
}
