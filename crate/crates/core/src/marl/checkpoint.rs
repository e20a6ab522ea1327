//! Self-describing JSON policy checkpoints.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::ScenarioConfig;
use crate::error::{Error, Result};
use crate::params::SimParams;

use super::policy::PolicyParams;
use super::trainer::TrainerConfig;

pub const FORMAT: &str = "rdw-arena-policy";
pub const FORMAT_VERSION: u32 = 1;

/// Scenario the policy was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub preset: String,
    pub width: f64,
    pub height: f64,
    pub n_users: usize,
    pub steering: String,
    pub params: SimParams,
}

impl ScenarioEcho {
    pub fn of(s: &ScenarioConfig) -> Self {
        Self {
            preset: s.space.preset_name().to_string(),
            width: s.space.width(),
            height: s.space.height(),
            n_users: s.n_users,
            steering: s.steering.name().to_string(),
            params: s.params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub format_version: u32,
    pub version_tag: String,
    pub trainer: TrainerConfig,
    pub scenario: ScenarioEcho,
    pub actor_shape: Vec<usize>,
    pub critic_shape: Vec<usize>,
    pub policy: PolicyParams,
}

impl Checkpoint {
    pub fn new(policy: PolicyParams, trainer: TrainerConfig, scenario: &ScenarioConfig) -> Self {
        Self {
            format: FORMAT.to_string(),
            format_version: FORMAT_VERSION,
            version_tag: policy.version.clone(),
            trainer,
            scenario: ScenarioEcho::of(scenario),
            actor_shape: policy.actor.sizes().to_vec(),
            critic_shape: policy.critic.sizes().to_vec(),
            policy,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let c: Checkpoint = serde_json::from_reader(f)?;
        if c.format != FORMAT || c.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint format {} v{}",
                c.format, c.format_version
            )));
        }
        if c.actor_shape != c.policy.actor.sizes() || c.critic_shape != c.policy.critic.sizes() {
            return Err(Error::Config("checkpoint layer shapes disagree with parameters".into()));
        }
        c.policy.check_finite()?;
        Ok(c)
    }
}
