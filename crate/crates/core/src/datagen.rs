//! Synthetic two-stage cohorts.
//!
//! Each subject carries a latent intervention decision drawn from a logistic
//! model of standard-normal features. Subjects without an intervention get an
//! exact zero target; the rest get a linear effect plus noise whose scale
//! grows with the ambiguity `1 - |2p - 1|` of the decision probability.

use std::collections::HashSet;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::features::FeatureMatrix;
use crate::numfmt::{sci, DATA_DIGITS};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub n_subjects: usize,
    pub n_features: usize,
    pub decision_weights: Vec<f64>,
    pub decision_intercept: f64,
    pub effect_weights: Vec<f64>,
    pub effect_intercept: f64,
    /// Noise floor `c0`.
    pub noise_base: f64,
    /// Ambiguity gain `c1`.
    pub noise_ambiguity_gain: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_subjects: 5000,
            n_features: 4,
            decision_weights: vec![2.0, -1.5, 1.0, 0.0],
            decision_intercept: 0.5,
            effect_weights: vec![0.05, 0.08, -0.04, 0.06],
            effect_intercept: 0.15,
            noise_base: 0.01,
            noise_ambiguity_gain: 0.2,
            seed: 7,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 10 {
            return Err(CascadeError::config("n_subjects", "must be at least 10"));
        }
        if self.n_features < 1 {
            return Err(CascadeError::config("n_features", "must be at least 1"));
        }
        if self.decision_weights.len() != self.n_features {
            return Err(CascadeError::config(
                "decision_weights",
                format!(
                    "length {} does not match n_features {}",
                    self.decision_weights.len(),
                    self.n_features
                ),
            ));
        }
        if self.effect_weights.len() != self.n_features {
            return Err(CascadeError::config(
                "effect_weights",
                format!(
                    "length {} does not match n_features {}",
                    self.effect_weights.len(),
                    self.n_features
                ),
            ));
        }
        if !(self.noise_base > 0.0 && self.noise_base.is_finite()) {
            return Err(CascadeError::config("noise_base", "must be positive"));
        }
        if !(self.noise_ambiguity_gain >= 0.0 && self.noise_ambiguity_gain.is_finite()) {
            return Err(CascadeError::config("noise_ambiguity_gain", "must be nonnegative"));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.decision_weights) || !self.decision_intercept.is_finite() {
            return Err(CascadeError::config("decision_weights", "must be finite"));
        }
        if !finite(&self.effect_weights) || !self.effect_intercept.is_finite() {
            return Err(CascadeError::config("effect_weights", "must be finite"));
        }
        Ok(())
    }

    /// Probability of an intervention at `x`.
    pub fn decision_probability(&self, x: &[f64]) -> f64 {
        logistic(dot(&self.decision_weights, x) + self.decision_intercept)
    }

    /// Noiseless effect size given an intervention.
    pub fn effect_mean(&self, x: &[f64]) -> f64 {
        dot(&self.effect_weights, x) + self.effect_intercept
    }

    /// Noise scale `c0 + c1 (1 - |2p - 1|)`.
    pub fn noise_scale(&self, p: f64) -> f64 {
        self.noise_base + self.noise_ambiguity_gain * ambiguity(p)
    }
}

pub fn ambiguity(p: f64) -> f64 {
    1.0 - (2.0 * p - 1.0).abs()
}

pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub ids: Vec<String>,
    pub features: FeatureMatrix,
    /// Fractional change; exactly zero when no intervention happened.
    pub target: Vec<f64>,
    pub change_label: Vec<u8>,
}

impl Cohort {
    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    /// Checks label consistency and id uniqueness.
    pub fn validate(&self) -> Result<()> {
        let n = self.target.len();
        if self.ids.len() != n || self.change_label.len() != n || self.features.n_rows() != n {
            return Err(CascadeError::Argument("cohort columns have unequal lengths".into()));
        }
        for (i, (&y, &c)) in self.target.iter().zip(&self.change_label).enumerate() {
            if (y != 0.0) != (c == 1) || c > 1 {
                return Err(CascadeError::parse(
                    i + 2,
                    format!("change_label {c} inconsistent with y = {y}"),
                ));
            }
        }
        let mut seen = HashSet::with_capacity(n);
        for (i, id) in self.ids.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(CascadeError::parse(i + 2, format!("duplicate id {id:?}")));
            }
        }
        Ok(())
    }

    /// Writes `id,y,change_label,f0..f{d-1}` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec!["id".to_string(), "y".into(), "change_label".into()];
        header.extend((0..self.features.n_cols()).map(|j| format!("f{j}")));
        out.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            let mut rec = vec![
                self.ids[i].clone(),
                sci(self.target[i], DATA_DIGITS),
                self.change_label[i].to_string(),
            ];
            rec.extend(self.features.row(i).iter().map(|v| sci(*v, DATA_DIGITS)));
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush().map_err(|e| CascadeError::Numerical(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Cohort> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let headers = rdr
            .headers()
            .map_err(|e| CascadeError::parse(1, e.to_string()))?
            .clone();
        let expect = ["id", "y", "change_label"];
        for (j, name) in expect.iter().enumerate() {
            if headers.get(j) != Some(name) {
                return Err(CascadeError::parse(1, format!("expected column {j} to be `{name}`")));
            }
        }
        let d = headers.len() - 3;
        if d == 0 {
            return Err(CascadeError::parse(1, "no feature columns"));
        }
        for j in 0..d {
            if headers.get(3 + j) != Some(format!("f{j}").as_str()) {
                return Err(CascadeError::parse(1, format!("expected feature column `f{j}`")));
            }
        }
        let (mut ids, mut target, mut labels, mut data) = (vec![], vec![], vec![], vec![]);
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 2;
            let rec = rec.map_err(|e| CascadeError::parse(row, e.to_string()))?;
            ids.push(rec[0].to_string());
            target.push(parse_finite(&rec[1], row, "y")?);
            labels.push(match &rec[2] {
                "0" => 0,
                "1" => 1,
                other => return Err(CascadeError::parse(row, format!("change_label {other:?} is not 0/1"))),
            });
            for j in 0..d {
                data.push(parse_finite(&rec[3 + j], row, &format!("f{j}"))?);
            }
        }
        let cohort = Cohort {
            features: FeatureMatrix::new(ids.len(), d, data)?,
            ids,
            target,
            change_label: labels,
        };
        cohort.validate()?;
        Ok(cohort)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> CascadeError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CascadeError::io("<csv stream>", io),
        other => CascadeError::Numerical(format!("{other:?}")),
    }
}

pub(crate) fn parse_finite(s: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CascadeError::parse(row, format!("column `{column}`: {s:?} is not a number")))?;
    if !v.is_finite() {
        return Err(CascadeError::parse(
            row,
            format!("column `{column}`: non-finite value {s:?}"),
        ));
    }
    Ok(v)
}

pub fn generate_cohort(config: &GenConfig) -> Result<Cohort> {
    config.validate()?;
    let n = config.n_subjects;
    let d = config.n_features;
    let mut rng = rng::stream(config.seed, rng::STREAM_GENERATE);
    let mut data = Vec::with_capacity(n * d);
    let mut target = Vec::with_capacity(n);
    let mut change_label = Vec::with_capacity(n);
    let width = (n - 1).to_string().len();
    let ids = (0..n).map(|i| format!("s{i:0width$}")).collect();
    for _ in 0..n {
        let start = data.len();
        data.extend((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let x = &data[start..];
        let p = config.decision_probability(x);
        let changed = rng.random::<f64>() < p;
        // the noise draw is consumed unconditionally so the stream layout
        // does not depend on the decision outcome
        let eps: f64 = rng.sample(StandardNormal);
        if changed {
            let y = config.effect_mean(x) + config.noise_scale(p) * eps;
            // an exact zero would break the label convention
            let y = if y == 0.0 { f64::MIN_POSITIVE } else { y };
            target.push(y);
            change_label.push(1);
        } else {
            target.push(0.0);
            change_label.push(0);
        }
    }
    Ok(Cohort {
        ids,
        features: FeatureMatrix::new(n, d, data)?,
        target,
        change_label,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub cal: Vec<usize>,
    pub test: Vec<usize>,
}

/// Uniform random partition. Calibration and test sizes are
/// `floor(fraction * n)`; the remainder goes to train. Each index set is
/// returned in ascending order.
pub fn split_cohort(n: usize, cal_fraction: f64, test_fraction: f64, seed: u64) -> Result<SplitIndices> {
    let in_unit = |f: f64| f > 0.0 && f < 1.0;
    if !in_unit(cal_fraction) {
        return Err(CascadeError::config("cal_fraction", "must lie in (0, 1)"));
    }
    if !in_unit(test_fraction) {
        return Err(CascadeError::config("test_fraction", "must lie in (0, 1)"));
    }
    if cal_fraction + test_fraction >= 1.0 {
        return Err(CascadeError::config(
            "test_fraction",
            "cal_fraction + test_fraction must be below 1",
        ));
    }
    let n_cal = (cal_fraction * n as f64).floor() as usize;
    let n_test = (test_fraction * n as f64).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, rng::STREAM_SPLIT));
    let mut test = order[..n_test].to_vec();
    let mut cal = order[n_test..n_test + n_cal].to_vec();
    let mut train = order[n_test + n_cal..].to_vec();
    test.sort_unstable();
    cal.sort_unstable();
    train.sort_unstable();
    Ok(SplitIndices { train, cal, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GenConfig {
        GenConfig {
            n_subjects: 200,
            ..GenConfig::default()
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_cohort(&small()).unwrap();
        let b = generate_cohort(&small()).unwrap();
        let (mut wa, mut wb) = (vec![], vec![]);
        a.write_csv(&mut wa).unwrap();
        b.write_csv(&mut wb).unwrap();
        assert_eq!(wa, wb);
        let c = generate_cohort(&GenConfig { seed: 8, ..small() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn labels_match_exact_zeros() {
        let c = generate_cohort(&small()).unwrap();
        c.validate().unwrap();
        assert!(c.change_label.contains(&0));
        assert!(c.change_label.contains(&1));
    }

    #[test]
    fn config_errors_name_field() {
        let bad = GenConfig {
            decision_weights: vec![1.0],
            ..small()
        };
        match generate_cohort(&bad) {
            Err(CascadeError::Config { field, .. }) => assert_eq!(field, "decision_weights"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = GenConfig {
            noise_base: 0.0,
            ..small()
        };
        assert!(matches!(bad.validate(), Err(CascadeError::Config { field, .. }) if field == "noise_base"));
        let bad = GenConfig {
            n_subjects: 9,
            ..small()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let c = generate_cohort(&small()).unwrap();
        let mut buf = vec![];
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,y,change_label,f0,f1,f2,f3\n"));
        let back = Cohort::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn split_sizes_floor() {
        let s = split_cohort(100, 0.2, 0.2, 1).unwrap();
        assert_eq!((s.train.len(), s.cal.len(), s.test.len()), (60, 20, 20));
        let s = split_cohort(101, 0.2, 0.25, 1).unwrap();
        assert_eq!((s.train.len(), s.cal.len(), s.test.len()), (56, 20, 25));
    }

    #[test]
    fn split_is_partition_and_deterministic() {
        let s = split_cohort(57, 0.3, 0.1, 4).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.cal).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..57).collect::<Vec<_>>());
        assert_eq!(s, split_cohort(57, 0.3, 0.1, 4).unwrap());
        assert_ne!(s, split_cohort(57, 0.3, 0.1, 5).unwrap());
    }

    #[test]
    fn split_rejects_bad_fractions() {
        assert!(split_cohort(100, 0.0, 0.2, 1).is_err());
        assert!(split_cohort(100, 0.2, 1.0, 1).is_err());
        assert!(split_cohort(100, 0.5, 0.5, 1).is_err());
    }
}
