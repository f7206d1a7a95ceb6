use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distributions::CodeParams;
use crate::error::{Error, Result};
use crate::sampler::{McConfig, DEFAULT_CHUNK_SIZE};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
    #[serde(default)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// `(n, m)` pairs.
    pub code_list: Vec<(u32, u32)>,
    /// Coded-register `σ_c` values, each in `[0, 1)`.
    pub sigma_grid: Vec<f64>,
    pub n_samples: u64,
    pub seed: u64,
    /// Number of uncoded error steps per coded step; defaults to `n`.
    #[serde(default)]
    pub n_steps_override: Option<u32>,
    #[serde(default = "default_chunk_size")]
    pub chunk_size: usize,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_chunk_size() -> usize {
    DEFAULT_CHUNK_SIZE
}

pub const MIN_SAMPLES: u64 = 1000;

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            code_list: vec![(5, 1), (5, 4), (4, 2), (3, 1)],
            sigma_grid: (0..20).map(|i| f64::from(i) * 0.05).collect(),
            n_samples: 200_000,
            seed: 0x5eed,
            n_steps_override: None,
            chunk_size: DEFAULT_CHUNK_SIZE,
            output: OutputPaths::default(),
        }
    }
}

impl SweepConfig {
    pub fn from_json_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: SweepConfig = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.into(),
            source: e,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.code_list.is_empty() {
            return Err(Error::InvalidConfig("code_list is empty".into()));
        }
        for &(n, m) in &self.code_list {
            CodeParams::new(n, m).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        if self.sigma_grid.is_empty() {
            return Err(Error::InvalidConfig("sigma_grid is empty".into()));
        }
        if let Some(s) = self.sigma_grid.iter().find(|s| !(0.0..1.0).contains(*s)) {
            return Err(Error::InvalidConfig(format!("sigma {s} outside [0, 1)")));
        }
        if self.n_samples < MIN_SAMPLES {
            return Err(Error::InvalidConfig(format!(
                "n_samples = {} below the minimum {MIN_SAMPLES}",
                self.n_samples
            )));
        }
        if self.n_steps_override == Some(0) {
            return Err(Error::InvalidConfig(
                "n_steps_override must be positive".into(),
            ));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidConfig("chunk_size must be positive".into()));
        }
        Ok(())
    }

    pub fn codes(&self) -> Result<Vec<CodeParams>> {
        self.code_list
            .iter()
            .map(|&(n, m)| CodeParams::new(n, m))
            .collect()
    }

    pub fn n_steps(&self, params: &CodeParams) -> u32 {
        self.n_steps_override.unwrap_or(params.n)
    }

    pub fn mc(&self) -> McConfig {
        McConfig::new(self.n_samples, self.seed).with_chunk_size(self.chunk_size)
    }
}
