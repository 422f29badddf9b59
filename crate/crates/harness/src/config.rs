//! Run configuration: one flat TOML document whose keys are the field names
//! of `SimConfig` and `TrainConfig`. Missing keys keep their defaults,
//! unknown keys are rejected.

use std::path::Path;

use emac_core::marl::TrainConfig;
use emac_core::SimConfig;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub sim: SimConfig,
    #[serde(flatten)]
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn new(sim: SimConfig, train: TrainConfig) -> Self {
        Self { sim, train }
    }

    /// Every accepted key, in declaration order.
    pub fn known_keys() -> Vec<String> {
        let table = toml::Table::try_from(Self::default()).expect("config serializes to a table");
        table.keys().cloned().collect()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        let known = Self::known_keys();
        let mut unknown: Vec<&String> = table.keys().filter(|k| !known.contains(k)).collect();
        if !unknown.is_empty() {
            unknown.sort();
            let list: Vec<&str> = unknown.iter().map(|k| k.as_str()).collect();
            return Err(HarnessError::Config(format!(
                "unknown keys: {}",
                list.join(", ")
            )));
        }
        let config: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.train.validate()?;
        Ok(())
    }
}
