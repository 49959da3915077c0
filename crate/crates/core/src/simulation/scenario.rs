//! Sparse alternatives: group 0 is perturbed, groups `1..K` share the base law.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::generators::{gen_mv_laplace, gen_mvn, LaplaceKind};
use crate::dataset::GroupedDataset;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// `N(delta_1, I)` against `N(0, I)`.
    NormalLocation,
    /// `N(0, 3 I)` against `N(0, I)`.
    NormalScale,
    /// `L(delta_1.2, I)` against `L(0, I)`.
    LaplaceLocation,
    /// `L(0, 3 I)` against `L(0, I)`.
    LaplaceScale,
    /// Every group from `N(0, I)`.
    NullUniformity,
}

impl Scenario {
    pub const ALTERNATIVES: [Scenario; 4] =
        [Scenario::NormalLocation, Scenario::NormalScale, Scenario::LaplaceLocation, Scenario::LaplaceScale];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::NormalLocation => "normal_location",
            Scenario::NormalScale => "normal_scale",
            Scenario::LaplaceLocation => "laplace_location",
            Scenario::LaplaceScale => "laplace_scale",
            Scenario::NullUniformity => "null_uniformity",
        }
    }

    /// `(shift, covariance scale)` of the perturbed group.
    fn perturbation(&self) -> (f64, f64) {
        match self {
            Scenario::NormalLocation => (1.0, 1.0),
            Scenario::NormalScale | Scenario::LaplaceScale => (0.0, 3.0),
            Scenario::LaplaceLocation => (1.2, 1.0),
            Scenario::NullUniformity => (0.0, 1.0),
        }
    }

    fn is_laplace(&self) -> bool {
        matches!(self, Scenario::LaplaceLocation | Scenario::LaplaceScale)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal_location" | "a" => Ok(Scenario::NormalLocation),
            "normal_scale" | "b" => Ok(Scenario::NormalScale),
            "laplace_location" | "c" => Ok(Scenario::LaplaceLocation),
            "laplace_scale" | "d" => Ok(Scenario::LaplaceScale),
            "null_uniformity" | "null" => Ok(Scenario::NullUniformity),
            other => Err(Error::UnknownScenario(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    #[serde(default)]
    pub laplace: LaplaceKind,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, k: usize, n: usize, d: usize, seed: u64) -> Self {
        ScenarioSpec { scenario, k, n, d, seed, laplace: LaplaceKind::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::TooFewGroups(self.k));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("scenarios need n >= 2, got {}", self.n)));
        }
        if self.d < 1 {
            return Err(Error::InvalidArgument("scenarios need d >= 1".into()));
        }
        Ok(())
    }
}

/// Draws a dataset for `spec`; group `k` uses the seed `derive_seed(seed, [k])`.
pub fn make_scenario(spec: &ScenarioSpec) -> Result<GroupedDataset> {
    spec.validate()?;
    let (shift, scale) = spec.scenario.perturbation();
    let groups = (0..spec.k)
        .map(|k| {
            let (b, s) = if k == 0 { (shift, scale) } else { (0.0, 1.0) };
            let mean = vec![b; spec.d];
            let seed = derive_seed(spec.seed, &[k as u64]);
            if spec.scenario.is_laplace() {
                gen_mv_laplace(spec.n, &mean, s, spec.laplace, seed)
            } else {
                gen_mvn(spec.n, &mean, s, seed)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    GroupedDataset::from_groups(groups, spec.d)
}
