use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use evfuse::experiment::{ExperimentConfig, Source, SourceOutcome};
use evfuse::rotation_estimation::{CameraIntrinsics, ESSENTIAL_SOLVER};

use crate::{CliError, CliResult};

/// Everything that influenced a `pipeline` run, plus its results. Feeding it
/// back through `--from-manifest` reproduces the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub essential_solver: String,
    pub dataset: PathBuf,
    pub max_duration: Option<f64>,
    pub intrinsics: CameraIntrinsics,
    pub sources: Vec<Source>,
    pub seed: u64,
    pub config: ExperimentConfig,
    #[serde(default)]
    pub results: Vec<SourceOutcome>,
}

impl RunManifest {
    pub fn new(
        dataset: PathBuf,
        max_duration: Option<f64>,
        intrinsics: CameraIntrinsics,
        sources: Vec<Source>,
        config: ExperimentConfig,
    ) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            essential_solver: ESSENTIAL_SOLVER.to_string(),
            dataset,
            max_duration,
            intrinsics,
            sources,
            seed: config.seed,
            config,
            results: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut m: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        m.config.seed = m.seed;
        m.config.validate()?;
        m.intrinsics.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
