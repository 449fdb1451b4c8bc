//! Flat TOML configuration shared by the library and the command line.
//!
//! Every key is optional and unset keys keep their defaults:
//!
//! ```toml
//! alpha_s = 4.0
//! sigma = 0.25
//! grid_rows = 32
//! grid_cols = 32
//! correct_with_gaze = 1.5
//! w0 = 500
//! think_bonus = 0.5
//! difficulty_high = 0.875
//! kl_start = 0.04
//! ```
//!
//! Unknown keys are errors.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::curation::{DifficultyBounds, StructuralConfig};
use crate::gazefield::GazeParams;
use crate::reward::{KlSchedule, RewardConfig};

pub const DEFAULT_GRID: usize = 32;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown config key(s): {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("grid dimensions must be positive, got {rows}x{cols}")]
    EmptyGrid { rows: usize, cols: usize },
    #[error("w0 must be at least 1")]
    ZeroWordBudget,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default)]
pub struct Config {
    #[serde(flatten)]
    pub gaze: GazeParams,
    pub grid_rows: usize,
    pub grid_cols: usize,
    #[serde(flatten)]
    pub reward: RewardConfig,
    #[serde(flatten)]
    pub kl: KlSchedule,
    #[serde(flatten)]
    pub structural: StructuralConfig,
    #[serde(flatten)]
    pub difficulty: DifficultyBounds,
    #[serde(flatten)]
    unknown: BTreeMap<String, toml::Value>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            gaze: GazeParams::default(),
            grid_rows: DEFAULT_GRID,
            grid_cols: DEFAULT_GRID,
            reward: RewardConfig::default(),
            kl: KlSchedule::default(),
            structural: StructuralConfig::default(),
            difficulty: DifficultyBounds::default(),
            unknown: BTreeMap::new(),
        }
    }
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s)?;
        if !cfg.unknown.is_empty() {
            return Err(ConfigError::UnknownKeys(cfg.unknown.into_keys().collect()));
        }
        if cfg.grid_rows == 0 || cfg.grid_cols == 0 {
            return Err(ConfigError::EmptyGrid {
                rows: cfg.grid_rows,
                cols: cfg.grid_cols,
            });
        }
        if cfg.reward.w0 == 0 {
            return Err(ConfigError::ZeroWordBudget);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}
