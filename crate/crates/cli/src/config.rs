//! JSON run configuration shared by all commands.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mccf_core::baselines::{Baseline, BaselineConfig};
use mccf_core::calibrate::CalibrationReport;
use mccf_core::mccf::{load_model, InferenceConfig, MccfPredictor, Mode};
use mccf_core::state_space::{ClusterModel, Ranges, EXTENDED_RANGES, URBAN_RANGES};
use mccf_core::CarFollowing;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CliError, Result};

/// Flags accepted by every command; each one overrides the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Reads a config file, or returns the defaults when no file is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(mccf_core::Error::from)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

/// Creates the output directory and records the effective configuration in it.
pub fn start_run<T: Serialize>(out: &Path, resolved: &T) -> Result<()> {
    create_dir(out)?;
    write_json(&out.join("resolved_config.json"), resolved)
}

pub fn required<'a>(path: &'a Option<PathBuf>, field: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| invalid(format!("config field `{field}` is required")))
}

/// State-space ranges: a named preset or explicit `[[lo, hi]; 3]` in
/// `(Δv, d, v)` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RangeSpec {
    Named(String),
    Custom(Ranges),
}

impl Default for RangeSpec {
    fn default() -> Self {
        RangeSpec::Named("urban".into())
    }
}

impl RangeSpec {
    pub fn resolve(&self) -> Result<Ranges> {
        match self {
            RangeSpec::Named(n) if n == "urban" => Ok(URBAN_RANGES),
            RangeSpec::Named(n) if n == "extended" => Ok(EXTENDED_RANGES),
            RangeSpec::Named(n) => Err(invalid(format!(
                "unknown range preset `{n}`; expected `urban`, `extended` or [[lo, hi], [lo, hi], [lo, hi]]"
            ))),
            RangeSpec::Custom(r) => Ok(*r),
        }
    }
}

/// A follower model to evaluate or simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    /// A trained MC-CF model file.
    Mccf {
        path: PathBuf,
        #[serde(default)]
        mode: Mode,
        #[serde(default)]
        conservative: bool,
        #[serde(default)]
        name: Option<String>,
    },
    /// A calibration report or a `{model, params}` file.
    Baseline { path: PathBuf },
    /// Baseline parameters given in place.
    Inline(BaselineConfig),
}

/// Loads every model file once and builds predictors from specs.
#[derive(Default)]
pub struct ModelCache {
    mccf: HashMap<PathBuf, Arc<ClusterModel>>,
}

impl ModelCache {
    pub fn cluster_model(&mut self, path: &Path) -> Result<Arc<ClusterModel>> {
        if let Some(m) = self.mccf.get(path) {
            return Ok(m.clone());
        }
        let m = Arc::new(load_model(path)?);
        self.mccf.insert(path.to_path_buf(), m.clone());
        Ok(m)
    }

    pub fn build(&mut self, spec: &ModelSpec, seed: u64) -> Result<Box<dyn CarFollowing>> {
        Ok(match spec {
            ModelSpec::Mccf {
                path,
                mode,
                conservative,
                name,
            } => {
                let cfg = match mode {
                    Mode::Deterministic if *conservative => {
                        return Err(invalid("conservative inference needs `mode: stochastic`"))
                    }
                    Mode::Deterministic => InferenceConfig::deterministic(),
                    Mode::Stochastic => InferenceConfig {
                        conservative: *conservative,
                        ..InferenceConfig::stochastic(seed)
                    },
                };
                let p = MccfPredictor::new(self.cluster_model(path)?, cfg);
                Box::new(match name {
                    Some(n) => p.with_name(n.clone()),
                    None => p,
                })
            }
            ModelSpec::Baseline { path } => Box::new(load_baseline(path)?),
            ModelSpec::Inline(cfg) => Box::new(Baseline::from_config(cfg)?),
        })
    }
}

/// Reads either a calibration report or a bare `{model, params}` file.
pub fn load_baseline(path: &Path) -> Result<Baseline> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let bad = |e: serde_json::Error| invalid(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(bad)?;
    if value.get("best_params").is_some() {
        let report: CalibrationReport = serde_json::from_value(value).map_err(bad)?;
        Ok(report.baseline()?)
    } else {
        let cfg: BaselineConfig = serde_json::from_value(value).map_err(bad)?;
        Ok(Baseline::from_config(&cfg)?)
    }
}
