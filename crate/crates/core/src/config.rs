//! Run configuration shared by the pipeline, harness and CLI.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::filter::{FilterThresholds, StabilityParams};
use crate::scene::SceneError;
use crate::strategies::GripperConfig;

/// Operating mode for target queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Mode {
    /// Generate for every object up front, then answer queries by lookup.
    Precompute = 1,
    /// Generate only for the queried target.
    OnDemand = 2,
}

impl TryFrom<u8> for Mode {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Mode::Precompute),
            2 => Ok(Mode::OnDemand),
            other => Err(format!("mode must be 1 or 2, got {other}")),
        }
    }
}

impl From<Mode> for u8 {
    fn from(m: Mode) -> u8 {
        m as u8
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub gripper: GripperConfig,
    pub thresholds: FilterThresholds,
    pub stability: StabilityParams,
    pub seed: u64,
    pub top_k: usize,
    pub mode: Mode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gripper: GripperConfig::default(),
            thresholds: FilterThresholds::default(),
            stability: StabilityParams::default(),
            seed: 0,
            top_k: 10,
            mode: Mode::Precompute,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        self.gripper
            .validate()
            .map_err(|e| SceneError::Config(e.to_string()))?;
        self.thresholds
            .validate()
            .map_err(|e| SceneError::Config(e.to_string()))?;
        self.stability
            .validate()
            .map_err(|e| SceneError::Config(e.to_string()))?;
        if self.top_k == 0 {
            return Err(SceneError::Config("top_k must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(SceneError::from_path_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|e| SceneError::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.at(path))
    }

    /// Hex SHA-256 of the canonical JSON serialization (declaration field order).
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}
