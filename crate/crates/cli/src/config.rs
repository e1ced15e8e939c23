//! Run configuration: arm parameters, simulation and GA settings, case
//! selection. Unknown keys are rejected and everything is validated before a
//! command starts work.

use std::path::{Path, PathBuf};

use gftlqr_core::harness::robustness::RobustnessConfig;
use gftlqr_core::harness::scenario::{build_scenarios, desk_subset_ids, select_cases};
use gftlqr_core::{GaConfig, ManipulatorParams, ScenarioCase, SimConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Masses and lengths of the arm; COM offsets and inertias are derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub tau_max: [f64; 2],
}

impl Default for ArmConfig {
    fn default() -> Self {
        let p = ManipulatorParams::reference();
        Self {
            m1: p.m1,
            m2: p.m2,
            l1: p.l1,
            l2: p.l2,
            tau_max: p.tau_max,
        }
    }
}

impl ArmConfig {
    pub fn params(&self) -> Result<ManipulatorParams, CliError> {
        ManipulatorParams::from_mass_length(self.m1, self.m2, self.l1, self.l2, self.tau_max)
            .map_err(|e| CliError::Validation(e.to_string()))
    }
}

/// `"full88"`, `"desk8"`, or an explicit list of case ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSelection {
    Named(String),
    Ids(Vec<u32>),
}

impl Default for ScenarioSelection {
    fn default() -> Self {
        Self::Named("desk8".into())
    }
}

impl ScenarioSelection {
    pub fn parse(selection: &str) -> Result<Self, CliError> {
        match selection.trim() {
            "full88" | "all" => Ok(Self::Named("full88".into())),
            "desk8" | "desk" => Ok(Self::Named("desk8".into())),
            list => list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<u32>()
                        .map_err(|_| CliError::Validation(format!("bad case id `{s}` in --cases")))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Self::Ids),
        }
    }

    pub fn resolve(&self) -> Result<Vec<ScenarioCase>, CliError> {
        let ids = match self {
            Self::Named(name) if name == "full88" => return Ok(build_scenarios()),
            Self::Named(name) if name == "desk8" => desk_subset_ids(),
            Self::Named(name) => {
                return Err(CliError::Validation(format!(
                    "unknown scenario set `{name}` (expected full88, desk8 or a list of ids)"
                )))
            }
            Self::Ids(ids) => ids.clone(),
        };
        if ids.is_empty() {
            return Err(CliError::Validation("no cases selected".into()));
        }
        select_cases(&ids).map_err(|id| CliError::Validation(format!("unknown case id {id}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: ArmConfig,
    pub sim: SimConfig,
    /// GA used for each per-case baseline search.
    pub baseline_ga: GaConfig,
    /// GA used to train the fuzzy tree.
    pub train_ga: GaConfig,
    pub robustness: RobustnessConfig,
    pub scenarios: ScenarioSelection,
    pub out_dir: PathBuf,
    /// Master seed; overrides the seed fields of the GA and robustness sections.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ArmConfig::default(),
            sim: SimConfig::default(),
            baseline_ga: GaConfig {
                n_generations: 100,
                ..GaConfig::default()
            },
            train_ga: GaConfig::default(),
            robustness: RobustnessConfig::default(),
            scenarios: ScenarioSelection::default(),
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
    }

    /// Applies the master seed to every seeded section.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.baseline_ga.seed = seed;
        self.train_ga.seed = seed;
        self.robustness.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params.params()?;
        self.sim.validate().map_err(CliError::Validation)?;
        for ga in [&self.baseline_ga, &self.train_ga] {
            ga.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        }
        let r = &self.robustness;
        if r.n_per_case == 0 {
            return Err(CliError::Validation("robustness.n_per_case must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&r.width) {
            return Err(CliError::Validation("robustness.width must lie in [0, 1)".into()));
        }
        self.scenarios.resolve()?;
        Ok(())
    }

    /// Hash of everything that changes a simulated trajectory: the arm and
    /// the simulation settings.
    pub fn digest(&self) -> String {
        #[derive(Serialize)]
        struct Dynamics<'a> {
            params: &'a ArmConfig,
            sim: &'a SimConfig,
        }
        let canonical = serde_json::to_string(&Dynamics {
            params: &self.params,
            sim: &self.sim,
        })
        .expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
