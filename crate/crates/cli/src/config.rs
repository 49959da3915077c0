//! Reproducible description of a single test run.

use std::path::{Path, PathBuf};

use kmax_core::rng::derive_seed;
use kmax_core::simulation::make_scenario;
use kmax_core::{GroupedDataset, ScenarioSpec, TestConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::input::parse_dataset_csv;

/// Exactly one of `input` and `scenario` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
    pub test: TestConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.input, &self.scenario) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either an input file or a scenario, not both".into()))
            }
            (None, None) => return Err(CliError::Config("an input file or a scenario is required".into())),
            _ => {}
        }
        let a = self.test.alpha;
        if !(a > 0.0 && a < 1.0) {
            return Err(CliError::Config(format!("alpha must lie in (0, 1), got {a}")));
        }
        Ok(())
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load_data(&self) -> Result<GroupedDataset> {
        self.validate()?;
        match (&self.input, &self.scenario) {
            (Some(path), _) => parse_dataset_csv(path),
            (_, Some(spec)) => Ok(make_scenario(spec)?),
            _ => unreachable!("validated"),
        }
    }
}

/// Data seed of a scenario run; distinct from the permutation seed and below
/// `2^63` so it fits a TOML integer.
pub fn scenario_seed(seed: u64) -> u64 {
    derive_seed(seed, &[0]) >> 1
}
