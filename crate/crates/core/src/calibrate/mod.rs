//! Baseline calibration by differential evolution on open-loop speed RMSE.

mod de;
mod objective;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::baselines::{Baseline, BaselineKind};
use crate::error::{Error, Result};
use crate::trajdata::Dataset;

pub use de::{
    differential_evolution, differential_evolution_observed, validate_bounds, DeConfig, DeResult,
    Generation,
};
pub use objective::{rmse_v_objective, simulate_speeds, CRASH_CLEARANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub model: BaselineKind,
    pub bounds: BTreeMap<String, (f64, f64)>,
    pub best_params: BTreeMap<String, f64>,
    pub best_cost: f64,
    pub history: Vec<f64>,
    pub generations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub population: usize,
    pub seed: u64,
}

impl CalibrationReport {
    pub fn baseline(&self) -> Result<Baseline> {
        Baseline::from_config(&crate::baselines::BaselineConfig {
            model: self.model,
            params: self.best_params.clone(),
        })
    }
}

/// Fits `kind` to `train` within its calibration bounds. The noise stream for
/// stochastic models is keyed by `cfg.seed`.
pub fn calibrate_model(
    kind: BaselineKind,
    train: &Dataset,
    cfg: &DeConfig,
) -> Result<CalibrationReport> {
    if train.is_empty() {
        return Err(Error::Validation(
            "calibration needs at least one pair".into(),
        ));
    }
    let bounds = kind.bounds();
    let objective = |x: &[f64]| match kind.from_vector(x) {
        Ok(m) => rmse_v_objective(&m, train, cfg.seed),
        Err(_) => f64::INFINITY,
    };
    let res = differential_evolution(objective, bounds, cfg)?;
    let names = kind.param_names();
    Ok(CalibrationReport {
        model: kind,
        bounds: names
            .iter()
            .map(|n| n.to_string())
            .zip(bounds.iter().copied())
            .collect(),
        best_params: names
            .iter()
            .map(|n| n.to_string())
            .zip(res.best_x)
            .collect(),
        best_cost: res.best_cost,
        history: res.history,
        generations: res.generations,
        evaluations: res.evaluations,
        converged: res.converged,
        population: cfg.population(kind.dim()),
        seed: cfg.seed,
    })
}
