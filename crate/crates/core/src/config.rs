//! Experiment configuration file (TOML). Section and field names mirror the
//! config structs; anything omitted takes its default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use entsched_qmcs::BkConfig;

use crate::agents::{ModelConfig, TrainConfig};
use crate::env::SimConfig;
use crate::error::Result;
use crate::preinfo::GenParams;
use crate::schedulers::StrategyConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchConfig {
    pub n_episodes: usize,
    pub base_seed: u64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self { n_episodes: 100, base_seed: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub sim: SimConfig,
    pub gen: GenParams,
    pub strategy: StrategyConfig,
    pub batch: BatchConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub qmcs: BkConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.gen.validate()?;
        self.train.validate()?;
        self.qmcs.validate()?;
        Ok(())
    }
}
