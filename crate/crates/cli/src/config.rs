//! Config files (TOML or JSON, chosen by extension) and flag overrides.
//! Flags always win over the file.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use evfuse::experiment::ExperimentConfig;
use evfuse::fusion::FusionConfig;
use evfuse::rotation_estimation::CameraIntrinsics;

use crate::args::{ExperimentOverrides, FusionOverrides};
use crate::{CliError, CliResult};

pub fn load_file<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).map_err(|e| bad(e.to_string())),
        Some("json") => serde_json::from_str(&text).map_err(|e| bad(e.to_string())),
        other => Err(bad(format!(
            "unsupported config extension {other:?}, expected .toml or .json"
        ))),
    }
}

pub fn load_intrinsics(path: &Path) -> CliResult<CameraIntrinsics> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let k: CameraIntrinsics = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    k.validate()?;
    Ok(k)
}

pub fn apply_fusion(cfg: &mut FusionConfig, o: &FusionOverrides) {
    if let Some(v) = o.beta {
        cfg.beta = v;
    }
    if let Some(v) = o.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = o.sigma {
        cfg.gaussian_sigma = v;
    }
    if let Some(v) = o.kernel_size {
        cfg.gaussian_kernel_size = v;
    }
    if let Some(v) = o.n_events {
        cfg.n_events = v;
    }
}

/// File config (or defaults) with every given flag applied, validated.
pub fn experiment_config(o: &ExperimentOverrides) -> CliResult<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(p) => load_file(p)?,
        None => ExperimentConfig::default(),
    };
    apply_experiment(&mut cfg, o);
    cfg.validate()?;
    Ok(cfg)
}

pub fn apply_experiment(cfg: &mut ExperimentConfig, o: &ExperimentOverrides) {
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    let p = &mut cfg.pipeline;
    if let Some(v) = o.threshold1 {
        p.threshold1 = v;
    }
    if let Some(v) = o.threshold2 {
        p.threshold2 = v;
    }
    if let Some(v) = o.ransac_iters {
        p.ransac.max_iterations = v;
    }
    if let Some(v) = o.ransac_threshold {
        p.ransac.threshold = v;
    }
    if let Some(v) = o.max_corners {
        p.detector.max_corners = v;
    }
    let r = &mut cfg.representation;
    if let Some(v) = o.tau {
        r.tau = v;
    }
    if let Some(v) = o.radius {
        r.sits_radius = v;
    }
    if let Some(v) = o.slice_events {
        r.slice_events = v;
    }
    if let Some(v) = o.max_dt {
        cfg.max_dt = v;
    }
    apply_fusion(&mut cfg.fusion, &o.fusion);
}

/// Parse "a,b,c" into floats.
pub fn parse_floats<const N: usize>(s: &str, what: &str) -> CliResult<[f64; N]> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("{what} '{s}': {e}")))?;
    vals.try_into().map_err(|v: Vec<f64>| {
        CliError::Config(format!(
            "{what} '{s}': expected {N} values, got {}",
            v.len()
        ))
    })
}
