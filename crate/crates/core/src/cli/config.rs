use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{ForecastTask, ModelSize, StudyGrid};
use crate::models::{Profile, SamplerSettings};
use crate::priors::{PriorConfig, PriorKind};

/// Run configuration. Parsed from one JSON file; unknown keys are errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Sets `n_draws`/`n_burn` of every sampler when present.
    #[serde(default)]
    pub profile: Option<Profile>,
    #[serde(default)]
    pub sampler: SamplerSettings,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub fit: Option<FitConfig>,
    #[serde(default)]
    pub forecast: Option<ForecastConfig>,
    #[serde(default)]
    pub pips: Option<PipsConfig>,
}

fn default_seed() -> u64 {
    1
}

fn default_threads() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub grid: StudyGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Regression,
    Var,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub model: ModelKind,
    pub prior: PriorConfig,
    /// CSV with a date column and one column per series.
    pub data: PathBuf,
    /// Regression response; defaults to the first series.
    #[serde(default)]
    pub response: Option<String>,
    /// Regression covariates (or VAR variables); defaults to all other
    /// series (all series for a VAR).
    #[serde(default)]
    pub variables: Option<Vec<String>>,
    #[serde(default = "default_lags")]
    pub lags: usize,
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    #[serde(default = "default_true")]
    pub write_draws: bool,
}

fn default_lags() -> usize {
    2
}

fn default_quantiles() -> Vec<f64> {
    vec![0.05, 0.5, 0.95]
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastModelConfig {
    pub label: String,
    pub prior: PriorConfig,
    #[serde(default)]
    pub tvp_off: bool,
    #[serde(default = "default_true")]
    pub sv: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastConfig {
    pub data: PathBuf,
    /// Transformation codes and size membership; without it the selected
    /// series are used as they are.
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default)]
    pub size: Option<ModelSize>,
    #[serde(default)]
    pub variables: Option<Vec<String>>,
    pub task: ForecastTask,
    pub models: Vec<ForecastModelConfig>,
    /// Label of the model that relative metrics refer to: one of `models`,
    /// or `white-noise` for the Gaussian white-noise benchmark.
    pub benchmark: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipsConfig {
    /// Draw file written by `fit`.
    pub draws: PathBuf,
}

pub const WHITE_NOISE: &str = "white-noise";

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::usage(format!("invalid config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Sampler settings after applying the profile.
    pub fn sampler_settings(&self) -> SamplerSettings {
        match self.profile {
            Some(p) => self.sampler.clone().with_profile(p),
            None => self.sampler.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::usage("threads must be at least 1"));
        }
        self.sampler_settings().validate()?;
        if let Some(s) = &self.simulate {
            s.grid.validate()?;
        }
        if let Some(f) = &self.fit {
            if f.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
                return Err(Error::usage("quantiles must lie in [0, 1]"));
            }
            if f.model == ModelKind::Var && f.lags == 0 {
                return Err(Error::usage("lags must be at least 1"));
            }
        }
        if let Some(f) = &self.forecast {
            if f.task.horizons.is_empty() || f.task.horizons.contains(&0) {
                return Err(Error::usage("forecast horizons must be positive"));
            }
            if f.models.is_empty() {
                return Err(Error::usage("forecast needs at least one model"));
            }
            if f.models.iter().any(|m| m.label == WHITE_NOISE) {
                return Err(Error::usage(format!("model label {WHITE_NOISE} is reserved")));
            }
            if f.benchmark != WHITE_NOISE && !f.models.iter().any(|m| m.label == f.benchmark) {
                return Err(Error::usage(format!("benchmark run {} is not among the models", f.benchmark)));
            }
            if f.models.iter().any(|m| m.prior.kind == PriorKind::Flat) {
                return Err(Error::usage("the flat prior is not offered for VAR forecasts"));
            }
        }
        Ok(())
    }
}
