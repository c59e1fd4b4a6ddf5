//! Closed-loop ring-road simulation with perturbation schedules and
//! collision accounting.
//!
//! Positions are held as integer multiples of 2⁻³² m, so wrapping at the
//! ring length and summing headways are exact.

mod scenarios;
mod svg;

use std::io::Write;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{idm_accel, IdmParams};
use crate::error::{Error, Result};
use crate::model::{CarFollowing, Observation};
use crate::rng::{self, StreamRng};
use crate::stats;
use crate::trajdata::{CfState, DEFAULT_VEHICLE_LENGTH, DT};

pub use scenarios::{builtin_scenario, BUILTIN_SCENARIOS};
pub use svg::space_time_svg;

/// Position resolution: units per metre.
pub const UNITS_PER_M: f64 = 4_294_967_296.0;
/// Gap left behind the leader after a collision (m).
pub const CONTACT_CLEARANCE: f64 = 0.1;

fn to_units(m: f64) -> i64 {
    (m * UNITS_PER_M).round() as i64
}

fn to_m(u: i64) -> f64 {
    u as f64 / UNITS_PER_M
}

/// Acceleration override for the target vehicle: decelerate, hold speed,
/// accelerate, then hand control back to the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationProfile {
    pub start_time: f64,
    /// Deceleration magnitude (m/s²).
    pub decel: f64,
    pub decel_duration: f64,
    pub hold_duration: f64,
    pub accel: f64,
    pub accel_duration: f64,
    #[serde(default)]
    pub target_vehicle: usize,
}

impl PerturbationProfile {
    /// Phase boundaries in whole steps: start, end of decel, end of hold, end of accel.
    pub fn step_bounds(&self, dt: f64) -> [usize; 4] {
        let s = |t: f64| (t / dt).round() as usize;
        let start = s(self.start_time);
        let d = start + s(self.decel_duration);
        let h = d + s(self.hold_duration);
        [start, d, h, h + s(self.accel_duration)]
    }

    /// Forced acceleration at `step`, if the profile is active.
    pub fn override_at(&self, step: usize, dt: f64) -> Option<f64> {
        let [start, d, h, a] = self.step_bounds(dt);
        if step < start || step >= a {
            None
        } else if step < d {
            Some(-self.decel)
        } else if step < h {
            Some(0.0)
        } else {
            Some(self.accel)
        }
    }

    fn validate(&self) -> Result<()> {
        let vals = [
            self.start_time,
            self.decel,
            self.decel_duration,
            self.hold_duration,
            self.accel,
            self.accel_duration,
        ];
        if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Validation(
                "perturbation times and magnitudes must be finite and ≥ 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingConfig {
    pub length: f64,
    pub n_vehicles: usize,
    pub v_start: f64,
    pub dt: f64,
    pub horizon: f64,
    pub trials: usize,
    pub vehicle_length: f64,
    pub perturbation: Option<PerturbationProfile>,
    pub seed: u64,
    /// Trajectory sampling interval in steps; 0 records nothing.
    pub record_every: usize,
}

impl Default for RingConfig {
    fn default() -> Self {
        Self {
            length: 3000.0,
            n_vehicles: 200,
            v_start: 5.84,
            dt: DT,
            horizon: 300.0,
            trials: 20,
            vehicle_length: DEFAULT_VEHICLE_LENGTH,
            perturbation: None,
            seed: 0,
            record_every: 10,
        }
    }
}

impl RingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite()
            && self.length > 0.0
            && self.length * UNITS_PER_M < 2f64.powi(62))
        {
            return Err(Error::Validation(
                "ring length must be positive and below 1e9 m".into(),
            ));
        }
        if self.n_vehicles == 0 {
            return Err(Error::Validation("ring needs at least one vehicle".into()));
        }
        if !(self.vehicle_length >= 0.0)
            || self.n_vehicles as f64 * (self.vehicle_length + CONTACT_CLEARANCE) >= self.length
        {
            return Err(Error::Validation(format!(
                "{} vehicles of length {} m do not fit on a {} m ring",
                self.n_vehicles, self.vehicle_length, self.length
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Validation("dt must be positive".into()));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::Validation("horizon must be non-negative".into()));
        }
        if !(self.v_start >= 0.0 && self.v_start.is_finite()) {
            return Err(Error::Validation("v_start must be non-negative".into()));
        }
        if let Some(p) = &self.perturbation {
            p.validate()?;
            if p.target_vehicle >= self.n_vehicles {
                return Err(Error::Validation(format!(
                    "target vehicle {} is not on the ring",
                    p.target_vehicle
                )));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    fn length_units(&self) -> i64 {
        to_units(self.length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub step: usize,
    pub follower: usize,
}

/// Vehicle `i` follows vehicle `(i + 1) mod N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RingState {
    pos: Vec<i64>,
    /// Distance from each vehicle's front to its leader's front.
    headway: Vec<i64>,
    pub speeds: Vec<f64>,
    /// Accelerations applied in the last step.
    pub accels: Vec<f64>,
    pub in_contact: Vec<bool>,
    pub collisions: Vec<CollisionEvent>,
    length: i64,
    vehicle_length: i64,
}

impl RingState {
    pub fn n(&self) -> usize {
        self.pos.len()
    }

    /// Positions in `[0, L)` (m).
    pub fn positions(&self) -> Vec<f64> {
        self.pos.iter().map(|&p| to_m(p)).collect()
    }

    /// Front-to-front headways (m).
    pub fn headways(&self) -> Vec<f64> {
        self.headway.iter().map(|&h| to_m(h)).collect()
    }

    /// Bumper-to-bumper spacings to each leader (m).
    pub fn spacings(&self) -> Vec<f64> {
        self.headway
            .iter()
            .map(|&h| to_m(h - self.vehicle_length))
            .collect()
    }

    pub fn state_of(&self, i: usize) -> CfState {
        let lead = (i + 1) % self.n();
        CfState::new(
            self.speeds[i],
            self.speeds[i] - self.speeds[lead],
            to_m(self.headway[i] - self.vehicle_length),
        )
    }

    /// Headways sum to the ring length, and each matches the wrapped
    /// position difference. Exact.
    pub fn closure_holds(&self) -> bool {
        let n = self.n();
        let sum_exact = stats::exact_sum(self.headway.iter().map(|&h| to_m(h)));
        let sum_int: i128 = self.headway.iter().map(|&h| h as i128).sum();
        let consistent = (0..n).all(|i| {
            let lead = (i + 1) % n;
            let d = (self.pos[lead] - self.pos[i]).rem_euclid(self.length);
            d == self.headway[i] % self.length
        });
        sum_int == self.length as i128 && sum_exact == to_m(self.length) && consistent
    }
}

/// Uniform placement at `L/N` spacing, everyone at `v_start`.
pub fn init_ring(cfg: &RingConfig) -> Result<RingState> {
    cfg.validate()?;
    let n = cfg.n_vehicles;
    let length = cfg.length_units();
    let pos: Vec<i64> = (0..n)
        .map(|i| (i as i128 * length as i128 / n as i128) as i64)
        .collect();
    let headway = (0..n)
        .map(|i| {
            if i + 1 < n {
                pos[i + 1] - pos[i]
            } else {
                pos[0] + length - pos[i]
            }
        })
        .collect();
    Ok(RingState {
        pos,
        headway,
        speeds: vec![cfg.v_start; n],
        accels: vec![0.0; n],
        in_contact: vec![false; n],
        collisions: Vec::new(),
        length,
        vehicle_length: to_units(cfg.vehicle_length),
    })
}

/// Advances all vehicles one step from the same snapshot, then resolves
/// overlaps. `rngs` holds one stream per vehicle.
pub fn step_ring(
    state: &mut RingState,
    model: &dyn CarFollowing,
    cfg: &RingConfig,
    step: usize,
    rngs: &mut [StreamRng],
) {
    let n = state.n();
    let forced = cfg
        .perturbation
        .as_ref()
        .and_then(|p| p.override_at(step, cfg.dt).map(|a| (p.target_vehicle, a)));
    let accels: Vec<f64> = (0..n)
        .map(|i| match forced {
            Some((target, a)) if target == i => a,
            _ => {
                let obs = Observation::new(state.state_of(i), state.accels[(i + 1) % n]);
                model.accel(&obs, &mut rngs[i] as &mut dyn RngCore)
            }
        })
        .collect();
    let mut dx = vec![0i64; n];
    let mut speeds = vec![0.0; n];
    for i in 0..n {
        let v = state.speeds[i];
        let v_next = (v + accels[i] * cfg.dt).max(0.0);
        dx[i] = to_units(0.5 * (v + v_next) * cfg.dt);
        speeds[i] = v_next;
    }
    for i in 0..n {
        state.pos[i] = (state.pos[i] + dx[i]).rem_euclid(state.length);
        state.headway[i] += dx[(i + 1) % n] - dx[i];
    }
    state.speeds = speeds;
    state.accels = accels;
    resolve_contacts(state, step);
}

/// Flags contact where spacing ≤ 0 (one event per contiguous episode) and
/// pushes the follower back behind its leader at the leader's speed,
/// repeating until no overlap remains.
#[allow(clippy::needless_range_loop)]
fn resolve_contacts(state: &mut RingState, step: usize) {
    let n = state.n();
    let min_headway = state.vehicle_length + to_units(CONTACT_CLEARANCE);
    let mut touched: Vec<bool> = state
        .headway
        .iter()
        .map(|&h| h <= state.vehicle_length)
        .collect();
    for _ in 0..=n {
        let mut moved = false;
        for i in 0..n {
            if state.headway[i] > state.vehicle_length {
                continue;
            }
            let shift = min_headway - state.headway[i];
            let behind = (i + n - 1) % n;
            state.pos[i] = (state.pos[i] - shift).rem_euclid(state.length);
            state.headway[i] += shift;
            if n > 1 {
                state.headway[behind] -= shift;
            }
            state.speeds[i] = state.speeds[(i + 1) % n];
            touched[i] = true;
            moved = true;
        }
        if !moved {
            break;
        }
    }
    for (i, (&hit, contact)) in touched.iter().zip(state.in_contact.iter_mut()).enumerate() {
        if hit && !*contact {
            state.collisions.push(CollisionEvent { step, follower: i });
        }
        *contact = hit;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub vehicle: usize,
    pub x: f64,
    pub v: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub collisions: usize,
    pub events: Vec<CollisionEvent>,
    pub min_speed: f64,
    pub max_speed: f64,
    /// Largest `|v − v_start|` seen over the run.
    pub max_speed_deviation: f64,
    /// Ring closure held after every step.
    pub closure_ok: bool,
    #[serde(skip)]
    pub trajectory: Vec<TrajectorySample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub model: String,
    pub collisions_per_trial: Vec<usize>,
    pub mean_collisions: f64,
    /// Population standard deviation across trials.
    pub std_collisions: f64,
    pub trials: Vec<TrialResult>,
}

fn record(out: &mut Vec<TrajectorySample>, state: &RingState, t: f64) {
    for i in 0..state.n() {
        out.push(TrajectorySample {
            t,
            vehicle: i,
            x: to_m(state.pos[i]),
            v: state.speeds[i],
            a: state.accels[i],
        });
    }
}

/// One trial; vehicle `i` draws from stream `(seed, trial, i)`.
pub fn run_trial(cfg: &RingConfig, model: &dyn CarFollowing, trial: usize) -> Result<TrialResult> {
    let mut state = init_ring(cfg)?;
    let mut rngs: Vec<StreamRng> = (0..state.n())
        .map(|i| rng::stream(cfg.seed, trial as u32, i as u32))
        .collect();
    let mut trajectory = Vec::new();
    let every = cfg.record_every;
    if every > 0 {
        record(&mut trajectory, &state, 0.0);
    }
    let mut closure_ok = state.closure_holds();
    let (mut lo, mut hi, mut dev) = (cfg.v_start, cfg.v_start, 0.0f64);
    for step in 0..cfg.steps() {
        step_ring(&mut state, model, cfg, step, &mut rngs);
        closure_ok &= state.closure_holds();
        for &v in &state.speeds {
            lo = lo.min(v);
            hi = hi.max(v);
            dev = dev.max((v - cfg.v_start).abs());
        }
        if every > 0 && (step + 1) % every == 0 {
            record(&mut trajectory, &state, (step + 1) as f64 * cfg.dt);
        }
    }
    if state.speeds.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("trial {trial}: non-finite speed")));
    }
    Ok(TrialResult {
        trial,
        collisions: state.collisions.len(),
        events: state.collisions,
        min_speed: lo,
        max_speed: hi,
        max_speed_deviation: dev,
        closure_ok,
        trajectory,
    })
}

/// `cfg.trials` independent trials in parallel with collision statistics.
pub fn run_experiment(cfg: &RingConfig, model: &dyn CarFollowing) -> Result<ExperimentResult> {
    cfg.validate()?;
    if cfg.trials == 0 {
        return Err(Error::Validation("trials must be at least 1".into()));
    }
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, model, t))
        .collect::<Result<Vec<_>>>()?;
    let counts: Vec<usize> = trials.iter().map(|t| t.collisions).collect();
    let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Ok(ExperimentResult {
        model: model.name().to_string(),
        mean_collisions: stats::mean(&as_f),
        std_collisions: stats::std_pop(&as_f),
        collisions_per_trial: counts,
        trials,
    })
}

/// `trial,t,vehicle,x,v,a` rows for every recorded sample.
pub fn write_trajectory_csv<W: Write>(trials: &[TrialResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["trial", "t", "vehicle", "x", "v", "a"])?;
    for tr in trials {
        for s in &tr.trajectory {
            w.write_record([
                tr.trial.to_string(),
                s.t.to_string(),
                s.vehicle.to_string(),
                s.x.to_string(),
                s.v.to_string(),
                s.a.to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Speed at which IDM is at rest on a uniform ring of `n` vehicles, by
/// bisection on `[0, v0]` down to floating-point resolution.
pub fn idm_equilibrium_speed(
    p: &IdmParams,
    n: usize,
    length: f64,
    vehicle_length: f64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Validation("need at least one vehicle".into()));
    }
    let d = length / n as f64 - vehicle_length;
    let f = |v: f64| idm_accel(p, &CfState::new(v, 0.0, d));
    let (mut lo, mut hi) = (0.0, p.v0);
    if f(lo) < 0.0 {
        return Err(Error::Numerical(format!(
            "no equilibrium: spacing {d} m is below the minimum gap {} m",
            p.s0
        )));
    }
    if f(lo) == 0.0 {
        return Ok(0.0);
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}
