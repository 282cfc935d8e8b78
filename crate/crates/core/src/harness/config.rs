use serde::{Deserialize, Serialize};
use std::path::Path;

use super::HarnessError;
use crate::baselines::BaselineKind;
use crate::dqn::TrainerConfig;
use crate::env::EnvConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationConfig {
    /// Number of percentile levels `Q`.
    pub levels: usize,
    pub episodes: usize,
    pub baselines: Vec<BaselineKind>,
    /// Refit statistics on the test deployment instead of reusing the
    /// training-time statistics when configurations differ.
    pub refit_on_test: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            levels: 20,
            episodes: 10,
            baselines: BaselineKind::all().to_vec(),
            refit_on_test: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationConfig {
    pub target_count: usize,
    pub population_size: usize,
    pub tolerance: f64,
    pub max_candidates: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            target_count: 10,
            population_size: 100,
            tolerance: 0.05,
            max_candidates: 5_000,
        }
    }
}

/// Everything a training or evaluation run needs, as one JSON document.
/// Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub trainer: TrainerConfig,
    pub normalization: NormalizationConfig,
    pub validation: ValidationConfig,
    pub test_envs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            trainer: TrainerConfig::default(),
            normalization: NormalizationConfig::default(),
            validation: ValidationConfig::default(),
            test_envs: 100,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
