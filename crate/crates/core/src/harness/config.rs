use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conformal::{Method, DEFAULT_SIGMA_FLOOR};
use crate::datagen::GenConfig;
use crate::error::{CascadeError, Result};
use crate::learners::{ClassifierConfig, RegressorConfig};
use crate::metrics::BootstrapConfig;
use crate::par::ExecMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// Synthetic cohort from `[data.generator]`.
    #[default]
    Generate,
    /// Cohort CSV at `data.path` (the `generate` subcommand's format).
    Cohort,
    /// Prediction table CSV at `data.path`; learners are skipped.
    Predictions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalFilter {
    /// Rows with a nonzero target.
    #[default]
    Truth,
    /// Rows whose classifier score exceeds the calibration-split Youden cut.
    Predicted,
}

impl std::str::FromStr for EvalFilter {
    type Err = CascadeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truth" => Ok(EvalFilter::Truth),
            "predicted" => Ok(EvalFilter::Predicted),
            other => Err(CascadeError::config(
                "filter",
                format!("unknown filter {other:?}; expected truth or predicted"),
            )),
        }
    }
}

impl EvalFilter {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalFilter::Truth => "truth",
            EvalFilter::Predicted => "predicted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    pub path: Option<PathBuf>,
    pub cal_fraction: f64,
    pub test_fraction: f64,
    /// The experiment seed replaces `generator.seed` at run time.
    pub generator: GenConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: DataSource::Generate,
            path: None,
            cal_fraction: 0.2,
            test_fraction: 0.2,
            generator: GenConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub regressor: RegressorConfig,
    pub classifier: ClassifierConfig,
    /// Standardize features with train-split statistics before fitting.
    pub standardize: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            regressor: RegressorConfig::default(),
            classifier: ClassifierConfig::default(),
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConformalConfig {
    pub sigma_floor: f64,
    pub cv_folds: usize,
    pub jab_bootstrap: usize,
}

impl Default for ConformalConfig {
    fn default() -> Self {
        ConformalConfig {
            sigma_floor: DEFAULT_SIGMA_FLOOR,
            cv_folds: 10,
            jab_bootstrap: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub bootstrap_b: usize,
    pub bootstrap_level: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            bootstrap_b: 1000,
            bootstrap_level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub beta_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub k_list: Vec<usize>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            beta_grid: (0..=15).map(|i| f64::from(i) / 10.0).collect(),
            alpha_grid: vec![0.3, 0.2, 0.1, 0.05],
            k_list: vec![3, 5, 7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    /// Mondrian bin count and the number of `u` strata used for the ratio
    /// and the per-stratum rows.
    pub k: usize,
    pub methods: Vec<Method>,
    pub filter: EvalFilter,
    pub exec: ExecMode,
    pub out: PathBuf,
    pub data: DataConfig,
    pub learners: LearnerConfig,
    pub conformal: ConformalConfig,
    pub metrics: MetricsConfig,
    pub ablation: AblationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 7,
            alpha: 0.2,
            beta: 0.7,
            k: 3,
            methods: Method::ALL.to_vec(),
            filter: EvalFilter::Truth,
            exec: ExecMode::Parallel,
            out: PathBuf::from("out"),
            data: DataConfig::default(),
            learners: LearnerConfig::default(),
            conformal: ConformalConfig::default(),
            metrics: MetricsConfig::default(),
            ablation: AblationConfig::default(),
        }
    }
}

fn check_alpha(alpha: f64, field: &str) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CascadeError::config(field, format!("{alpha} is outside (0, 1)")))
    }
}

fn check_beta(beta: f64, field: &str) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(CascadeError::config(
            field,
            format!("{beta} must be a finite value >= 0"),
        ))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CascadeError::config("config", e.message().to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CascadeError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| e.context(format!("config file {}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha, "alpha")?;
        check_beta(self.beta, "beta")?;
        if self.k < 2 {
            return Err(CascadeError::config("k", format!("{} must be at least 2", self.k)));
        }
        if self.methods.is_empty() {
            return Err(CascadeError::config("methods", "at least one method is required"));
        }
        if !(self.conformal.sigma_floor > 0.0 && self.conformal.sigma_floor <= 1.0) {
            return Err(CascadeError::config("conformal.sigma_floor", "must lie in (0, 1]"));
        }
        for &a in &self.ablation.alpha_grid {
            check_alpha(a, "ablation.alpha_grid")?;
        }
        for &b in &self.ablation.beta_grid {
            check_beta(b, "ablation.beta_grid")?;
        }
        if let Some(&k) = self.ablation.k_list.iter().find(|&&k| k < 2) {
            return Err(CascadeError::config(
                "ablation.k_list",
                format!("{k} must be at least 2"),
            ));
        }
        self.bootstrap().validate()?;
        match self.data.source {
            DataSource::Generate => self.data.generator.validate()?,
            DataSource::Cohort | DataSource::Predictions => {
                if self.data.path.is_none() {
                    return Err(CascadeError::config("data.path", "required for this data source"));
                }
            }
        }
        if self.data.source == DataSource::Predictions {
            if let Some(m) = self.methods.iter().find(|m| m.needs_refit()) {
                return Err(CascadeError::config(
                    "methods",
                    format!("{m} refits the regressor and cannot run on a prediction table"),
                ));
            }
        }
        Ok(())
    }

    pub fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig {
            replicates: self.metrics.bootstrap_b,
            level: self.metrics.bootstrap_level,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.ablation.beta_grid.len(), 16);
        assert_eq!(cfg.ablation.beta_grid[15], 1.5);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "alpha = 0.1\nmethods = [\"split\", \"cascade\"]\n[data]\ncal_fraction = 0.3\n",
        )
        .unwrap();
        assert_eq!(cfg.alpha, 0.1);
        assert_eq!(cfg.methods, vec![Method::Split, Method::Cascade]);
        assert_eq!(cfg.data.cal_fraction, 0.3);
        assert_eq!(cfg.data.test_fraction, 0.2);
    }

    #[test]
    fn bad_values_are_config_errors() {
        let unknown = ExperimentConfig::from_toml_str("alpah = 0.1\n").unwrap_err();
        assert_eq!(unknown.exit_code(), 2);
        let mut cfg = ExperimentConfig {
            alpha: 1.0,
            ..Default::default()
        };
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
        cfg.alpha = 0.2;
        cfg.data.source = DataSource::Predictions;
        cfg.data.path = Some("p.csv".into());
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("methods"), "{err}");
    }
}
