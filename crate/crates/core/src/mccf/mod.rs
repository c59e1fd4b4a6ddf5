//! MC-CF inference: next-cluster prediction, acceleration sampling,
//! kinematic stepping and trajectory rollouts.

mod augment;
mod kinematics;
mod rollout;

use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CarFollowing, Observation};
use crate::state_space::ClusterModel;
use crate::stats;
use crate::trajdata::{CfState, DT};

pub use crate::state_space::{load_model, save_model};
pub use augment::{augment_solo, GHOST_SPACING_EXTENDED, GHOST_SPACING_URBAN};
pub use kinematics::kinematic_step;
pub use rollout::{
    one_step_predict, one_step_truth, open_loop_rollout, simulate_follower, write_rollouts_csv,
    OneStep, Rollout,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Deterministic,
    #[default]
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub mode: Mode,
    /// Time-to-collision gated sampling from the low end of the pool.
    pub conservative: bool,
    pub ttc_tight: f64,
    pub ttc_loose: f64,
    pub pct_tight: f64,
    pub pct_loose: f64,
    pub seed: u64,
    pub dt: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Stochastic,
            conservative: false,
            ttc_tight: 3.0,
            ttc_loose: 10.0,
            pct_tight: 5.0,
            pct_loose: 30.0,
            seed: 0,
            dt: DT,
        }
    }
}

impl InferenceConfig {
    pub fn deterministic() -> Self {
        Self {
            mode: Mode::Deterministic,
            ..Self::default()
        }
    }

    pub fn stochastic(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pct_ok = |p: f64| p > 0.0 && p <= 100.0;
        if !(self.ttc_tight < self.ttc_loose) {
            return Err(Error::Validation(
                "ttc_tight must be below ttc_loose".into(),
            ));
        }
        if !pct_ok(self.pct_tight) || !pct_ok(self.pct_loose) {
            return Err(Error::Validation("percentiles must lie in (0, 100]".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Validation("dt must be positive".into()));
        }
        Ok(())
    }

    /// Percentile cap on the acceleration pool for this state, if any.
    ///
    /// Only applies while closing in (`dv > 0`): TTC `= d / dv` below
    /// `ttc_tight` gives `pct_tight`, below `ttc_loose` gives `pct_loose`.
    pub fn pool_percentile(&self, s: &CfState) -> Option<f64> {
        if !self.conservative || !(s.dv > 0.0) {
            return None;
        }
        let ttc = s.d / s.dv;
        if ttc < self.ttc_tight {
            Some(self.pct_tight)
        } else if ttc < self.ttc_loose {
            Some(self.pct_loose)
        } else {
            None
        }
    }
}

/// Samples at or below the pool's `pct`-th percentile (linear interpolation).
/// `pool` must be ascending; the result always holds at least the minimum.
pub fn restrict_pool(pool: &[f64], pct: f64) -> &[f64] {
    let cap = stats::quantile_sorted(pool, pct / 100.0);
    let k = pool.partition_point(|&a| a <= cap).max(1);
    &pool[..k]
}

/// Most probable next cluster (lowest id on ties) and the mean of its
/// acceleration distribution. A cluster with no observed exits stays put.
pub fn predict_det(model: &ClusterModel, s: &CfState) -> (u32, f64) {
    let current = model.nearest_cluster(s);
    let next = model.transitions.most_probable(current).unwrap_or(current);
    (next, model.accel_mean(next))
}

/// Next cluster drawn from the transition row, acceleration drawn uniformly
/// from that cluster's pool (restricted under conservative mode).
pub fn predict_stoch(
    model: &ClusterModel,
    s: &CfState,
    cfg: &InferenceConfig,
    rng: &mut dyn RngCore,
) -> (u32, f64) {
    let current = model.nearest_cluster(s);
    let next = model.transitions.sample(current, rng).unwrap_or(current);
    let pool = model.cluster(next).accel_samples.as_slice();
    let pool = match cfg.pool_percentile(s) {
        Some(pct) => restrict_pool(pool, pct),
        None => pool,
    };
    let accel = pool[rng.random_range(0..pool.len())];
    (next, accel)
}

/// MC-CF as a [`CarFollowing`] model.
#[derive(Debug, Clone)]
pub struct MccfPredictor {
    pub model: Arc<ClusterModel>,
    pub cfg: InferenceConfig,
    name: String,
}

impl MccfPredictor {
    pub fn new(model: Arc<ClusterModel>, cfg: InferenceConfig) -> Self {
        let name = match (cfg.mode, cfg.conservative) {
            (Mode::Deterministic, _) => "MC-CF (det)",
            (Mode::Stochastic, false) => "MC-CF (stoch)",
            (Mode::Stochastic, true) => "MC-CF (stoch, conservative)",
        };
        Self {
            model,
            cfg,
            name: name.to_string(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl CarFollowing for MccfPredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn is_stochastic(&self) -> bool {
        self.cfg.mode == Mode::Stochastic
    }

    fn accel(&self, obs: &Observation, rng: &mut dyn RngCore) -> f64 {
        match self.cfg.mode {
            Mode::Deterministic => predict_det(&self.model, &obs.state).1,
            Mode::Stochastic => predict_stoch(&self.model, &obs.state, &self.cfg, rng).1,
        }
    }
}
