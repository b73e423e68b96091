//! Experiment configuration: one JSON document per experiment,
//! schema-validated before any work. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gblend_core::datagen::SyntheticSpec;
use gblend_core::fusion::ArchSpec;
use gblend_core::trainer::TrainConfig;
use gblend_core::Error;

pub const CONFIG_VERSION: u32 = 1;

/// Output root override; `output_dir` resolves relative to it when set.
pub const OUT_ROOT_ENV: &str = "GBLEND_OUT_ROOT";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    pub output_dir: String,
    pub dataset: DatasetSource,
    pub arch: ArchSpec,
    pub train: TrainConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    Path(String),
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {}", path.display(), e)))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {})",
                self.version, CONFIG_VERSION
            )));
        }
        if let DatasetSource::Synthetic(spec) = &self.dataset {
            spec.validate()?;
        }
        self.train.validate()?;
        if self.arch.encoders.is_empty() {
            return Err(Error::Config("arch.encoders must not be empty".into()));
        }
        Ok(())
    }

    /// Resolves the output directory against the environment root override.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var(OUT_ROOT_ENV) {
            Ok(root) if !root.is_empty() => Path::new(&root).join(&self.output_dir),
            _ => PathBuf::from(&self.output_dir),
        }
    }
}
