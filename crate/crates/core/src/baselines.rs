//! Parametric car-following baselines: IDM, SIDM, Van Arem, FVDM (constant
//! time headway and sigmoid profiles) and Gipps.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CarFollowing, Observation};
use crate::trajdata::CfState;

pub const ACCEL_MIN: f64 = -10.0;
pub const ACCEL_MAX: f64 = 5.0;

/// Clamps to the practical range `[−10, 5]` m/s². NaN maps to full braking.
pub fn clamp_accel(a: f64) -> f64 {
    if a.is_nan() {
        ACCEL_MIN
    } else {
        a.clamp(ACCEL_MIN, ACCEL_MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    pub v0: f64,
    pub t_headway: f64,
    pub a_max: f64,
    pub b: f64,
    pub s0: f64,
    pub delta: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            v0: 30.0,
            t_headway: 1.5,
            a_max: 1.0,
            b: 1.5,
            s0: 2.0,
            delta: 4.0,
        }
    }
}

impl IdmParams {
    /// Desired gap `s*(v, Δv)`.
    pub fn desired_gap(&self, v: f64, dv: f64) -> f64 {
        self.s0 + v * self.t_headway + v * dv / (2.0 * (self.a_max * self.b).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidmParams {
    pub idm: IdmParams,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VanAremParams {
    pub k_a: f64,
    pub k_v: f64,
    pub k_d: f64,
    pub t_system: f64,
    pub v_int: f64,
    pub r_min: f64,
    /// Leader deceleration capability (m/s²).
    pub d_p: f64,
    /// Follower deceleration capability (m/s²).
    pub d_dec: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FvdmProfile {
    Cth,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FvdmParams {
    pub k1: f64,
    pub k2: f64,
    pub s0: f64,
    pub t_headway: f64,
    pub v_max: f64,
    pub profile: FvdmProfile,
}

impl FvdmParams {
    /// Desired velocity `V(d)`.
    pub fn desired_speed(&self, d: f64) -> f64 {
        if d <= self.s0 {
            return 0.0;
        }
        match self.profile {
            FvdmProfile::Cth => self.v_max.min((d - self.s0) / self.t_headway),
            FvdmProfile::Sigmoid => {
                let span = self.t_headway * self.v_max;
                if d >= self.s0 + span {
                    self.v_max
                } else {
                    0.5 * self.v_max * (1.0 - (PI * (d - self.s0) / span).cos())
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GippsParams {
    pub a_max: f64,
    pub b: f64,
    pub tau: f64,
    pub theta: f64,
    pub s0: f64,
    pub v_max: f64,
    pub b_hat: f64,
}

pub fn idm_accel(p: &IdmParams, s: &CfState) -> f64 {
    clamp_accel(idm_raw(p, s))
}

fn idm_raw(p: &IdmParams, s: &CfState) -> f64 {
    if s.d <= 0.0 {
        return ACCEL_MIN;
    }
    let gap = p.desired_gap(s.v, s.dv) / s.d;
    p.a_max * (1.0 - (s.v / p.v0).powf(p.delta) - gap * gap)
}

/// IDM plus `σ·ξ` with `ξ` standard normal.
pub fn sidm_accel(p: &SidmParams, s: &CfState, rng: &mut dyn RngCore) -> f64 {
    if s.d <= 0.0 {
        return ACCEL_MIN;
    }
    let xi: f64 = StandardNormal.sample(rng);
    clamp_accel(idm_raw(&p.idm, s) + p.sigma * xi)
}

pub fn van_arem_accel(p: &VanAremParams, s: &CfState, a_lead: f64) -> f64 {
    if s.d <= 0.0 {
        return ACCEL_MIN;
    }
    let r_safe = 0.5 * s.dv * s.dv * (1.0 / p.d_p - 1.0 / p.d_dec);
    let r_system = p.t_system * s.v;
    let d_ref = r_safe.max(r_system).max(p.r_min);
    let a_v = p.k * (p.v_int - s.v);
    let a_d = p.k_a * a_lead - p.k_v * s.dv + p.k_d * (s.d - d_ref);
    clamp_accel(a_v.min(a_d))
}

pub fn fvdm_accel(p: &FvdmParams, s: &CfState) -> f64 {
    if s.d <= 0.0 {
        return ACCEL_MIN;
    }
    clamp_accel(p.k1 * (p.desired_speed(s.d) - s.v) - p.k2 * s.dv)
}

/// Speed one reaction time ahead: the lesser of the free-flow and safe-braking
/// terms, floored at zero. A negative braking radicand gives zero.
pub fn gipps_next_speed(p: &GippsParams, s: &CfState, v_lead: f64) -> f64 {
    let ratio = s.v / p.v_max;
    let free = s.v + 2.5 * p.a_max * p.tau * (1.0 - ratio) * (0.025 + ratio).sqrt();
    let lag = p.tau / 2.0 + p.theta;
    let radicand = p.b * p.b * lag * lag
        + p.b * (2.0 * (s.d - p.s0) - p.tau * s.v + v_lead * v_lead / p.b_hat);
    let safe = if radicand < 0.0 {
        0.0
    } else {
        -p.b * lag + radicand.sqrt()
    };
    free.min(safe).max(0.0)
}

/// `(v_next − v) / τ`, clamped.
pub fn gipps_accel(p: &GippsParams, s: &CfState) -> f64 {
    if s.d <= 0.0 {
        return ACCEL_MIN;
    }
    clamp_accel((gipps_next_speed(p, s, s.v_lead()) - s.v) / p.tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaselineKind {
    #[serde(rename = "idm")]
    Idm,
    #[serde(rename = "sidm")]
    Sidm,
    #[serde(rename = "vanarem")]
    VanArem,
    #[serde(rename = "fvdm-cth")]
    FvdmCth,
    #[serde(rename = "fvdm-sigmoid")]
    FvdmSigmoid,
    #[serde(rename = "gipps")]
    Gipps,
}

const IDM_NAMES: &[&str] = &["v0", "t_headway", "a_max", "b", "s0", "delta"];
const IDM_BOUNDS: &[(f64, f64)] = &[
    (5.0, 50.0),
    (0.5, 3.0),
    (0.1, 5.0),
    (0.1, 10.0),
    (0.5, 10.0),
    (1.0, 10.0),
];
const SIDM_NAMES: &[&str] = &["v0", "t_headway", "a_max", "b", "s0", "delta", "sigma"];
const SIDM_BOUNDS: &[(f64, f64)] = &[
    (5.0, 50.0),
    (0.5, 3.0),
    (0.1, 5.0),
    (0.1, 10.0),
    (0.5, 10.0),
    (1.0, 10.0),
    (0.01, 2.0),
];
const VAN_AREM_NAMES: &[&str] = &[
    "k_a", "k_v", "k_d", "t_system", "v_int", "r_min", "d_p", "d_dec", "k",
];
const VAN_AREM_BOUNDS: &[(f64, f64)] = &[
    (0.1, 5.0),
    (0.1, 5.0),
    (0.1, 5.0),
    (0.5, 3.0),
    (5.0, 50.0),
    (0.1, 5.0),
    (0.1, 10.0),
    (0.1, 10.0),
    (0.1, 1.0),
];
const FVDM_NAMES: &[&str] = &["k1", "k2", "s0", "t_headway", "v_max"];
const FVDM_BOUNDS: &[(f64, f64)] = &[(0.1, 5.0), (0.1, 5.0), (0.1, 10.0), (0.5, 3.0), (5.0, 50.0)];
const GIPPS_NAMES: &[&str] = &["a_max", "b", "tau", "theta", "s0", "v_max", "b_hat"];
const GIPPS_BOUNDS: &[(f64, f64)] = &[
    (0.5, 3.0),
    (1.0, 4.0),
    (0.1, 1.5),
    (0.3, 1.0),
    (0.1, 10.0),
    (5.0, 50.0),
    (2.0, 5.0),
];

impl BaselineKind {
    pub const ALL: [BaselineKind; 6] = [
        BaselineKind::Idm,
        BaselineKind::Sidm,
        BaselineKind::VanArem,
        BaselineKind::FvdmCth,
        BaselineKind::FvdmSigmoid,
        BaselineKind::Gipps,
    ];

    /// Identifier used in configs and on the command line.
    pub fn id(self) -> &'static str {
        match self {
            BaselineKind::Idm => "idm",
            BaselineKind::Sidm => "sidm",
            BaselineKind::VanArem => "vanarem",
            BaselineKind::FvdmCth => "fvdm-cth",
            BaselineKind::FvdmSigmoid => "fvdm-sigmoid",
            BaselineKind::Gipps => "gipps",
        }
    }

    /// Name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            BaselineKind::Idm => "IDM",
            BaselineKind::Sidm => "SIDM",
            BaselineKind::VanArem => "Van Arem",
            BaselineKind::FvdmCth => "FVDM-CTH",
            BaselineKind::FvdmSigmoid => "FVDM-Sigmoid",
            BaselineKind::Gipps => "Gipps",
        }
    }

    pub fn is_stochastic(self) -> bool {
        self == BaselineKind::Sidm
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            BaselineKind::Idm => IDM_NAMES,
            BaselineKind::Sidm => SIDM_NAMES,
            BaselineKind::VanArem => VAN_AREM_NAMES,
            BaselineKind::FvdmCth | BaselineKind::FvdmSigmoid => FVDM_NAMES,
            BaselineKind::Gipps => GIPPS_NAMES,
        }
    }

    /// Calibration box, one `(lower, upper)` per parameter.
    pub fn bounds(self) -> &'static [(f64, f64)] {
        match self {
            BaselineKind::Idm => IDM_BOUNDS,
            BaselineKind::Sidm => SIDM_BOUNDS,
            BaselineKind::VanArem => VAN_AREM_BOUNDS,
            BaselineKind::FvdmCth | BaselineKind::FvdmSigmoid => FVDM_BOUNDS,
            BaselineKind::Gipps => GIPPS_BOUNDS,
        }
    }

    pub fn dim(self) -> usize {
        self.param_names().len()
    }

    /// Builds a model from a parameter vector ordered as [`Self::param_names`].
    pub fn from_vector(self, x: &[f64]) -> Result<Baseline> {
        if x.len() != self.dim() {
            return Err(Error::Validation(format!(
                "{} takes {} parameters, got {}",
                self.id(),
                self.dim(),
                x.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "{}: parameter {} is not finite",
                self.id(),
                self.param_names()[i]
            )));
        }
        let idm = |x: &[f64]| IdmParams {
            v0: x[0],
            t_headway: x[1],
            a_max: x[2],
            b: x[3],
            s0: x[4],
            delta: x[5],
        };
        let fvdm = |profile| FvdmParams {
            k1: x[0],
            k2: x[1],
            s0: x[2],
            t_headway: x[3],
            v_max: x[4],
            profile,
        };
        Ok(match self {
            BaselineKind::Idm => Baseline::Idm(idm(x)),
            BaselineKind::Sidm => Baseline::Sidm(SidmParams {
                idm: idm(x),
                sigma: x[6],
            }),
            BaselineKind::VanArem => Baseline::VanArem(VanAremParams {
                k_a: x[0],
                k_v: x[1],
                k_d: x[2],
                t_system: x[3],
                v_int: x[4],
                r_min: x[5],
                d_p: x[6],
                d_dec: x[7],
                k: x[8],
            }),
            BaselineKind::FvdmCth => Baseline::Fvdm(fvdm(FvdmProfile::Cth)),
            BaselineKind::FvdmSigmoid => Baseline::Fvdm(fvdm(FvdmProfile::Sigmoid)),
            BaselineKind::Gipps => Baseline::Gipps(GippsParams {
                a_max: x[0],
                b: x[1],
                tau: x[2],
                theta: x[3],
                s0: x[4],
                v_max: x[5],
                b_hat: x[6],
            }),
        })
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.id() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

/// A parametrised baseline model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    Idm(IdmParams),
    Sidm(SidmParams),
    VanArem(VanAremParams),
    Fvdm(FvdmParams),
    Gipps(GippsParams),
}

impl Baseline {
    pub fn kind(&self) -> BaselineKind {
        match self {
            Baseline::Idm(_) => BaselineKind::Idm,
            Baseline::Sidm(_) => BaselineKind::Sidm,
            Baseline::VanArem(_) => BaselineKind::VanArem,
            Baseline::Fvdm(p) => match p.profile {
                FvdmProfile::Cth => BaselineKind::FvdmCth,
                FvdmProfile::Sigmoid => BaselineKind::FvdmSigmoid,
            },
            Baseline::Gipps(_) => BaselineKind::Gipps,
        }
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let idm = |p: &IdmParams| vec![p.v0, p.t_headway, p.a_max, p.b, p.s0, p.delta];
        match self {
            Baseline::Idm(p) => idm(p),
            Baseline::Sidm(p) => {
                let mut v = idm(&p.idm);
                v.push(p.sigma);
                v
            }
            Baseline::VanArem(p) => vec![
                p.k_a, p.k_v, p.k_d, p.t_system, p.v_int, p.r_min, p.d_p, p.d_dec, p.k,
            ],
            Baseline::Fvdm(p) => vec![p.k1, p.k2, p.s0, p.t_headway, p.v_max],
            Baseline::Gipps(p) => vec![p.a_max, p.b, p.tau, p.theta, p.s0, p.v_max, p.b_hat],
        }
    }

    pub fn to_config(&self) -> BaselineConfig {
        let kind = self.kind();
        BaselineConfig {
            model: kind,
            params: kind
                .param_names()
                .iter()
                .map(|n| n.to_string())
                .zip(self.to_vector())
                .collect(),
        }
    }

    pub fn from_config(cfg: &BaselineConfig) -> Result<Self> {
        let names = cfg.model.param_names();
        if let Some(extra) = cfg.params.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(Error::Validation(format!(
                "{}: unknown parameter {extra}",
                cfg.model
            )));
        }
        let x = names
            .iter()
            .map(|n| {
                cfg.params.get(*n).copied().ok_or_else(|| {
                    Error::Validation(format!("{}: missing parameter {n}", cfg.model))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        cfg.model.from_vector(&x)
    }

    /// Acceleration for `obs`; only SIDM consumes randomness.
    pub fn accel_of(&self, obs: &Observation, rng: &mut dyn RngCore) -> f64 {
        let s = &obs.state;
        match self {
            Baseline::Idm(p) => idm_accel(p, s),
            Baseline::Sidm(p) => sidm_accel(p, s, rng),
            Baseline::VanArem(p) => van_arem_accel(p, s, obs.a_lead),
            Baseline::Fvdm(p) => fvdm_accel(p, s),
            Baseline::Gipps(p) => gipps_accel(p, s),
        }
    }
}

impl CarFollowing for Baseline {
    fn name(&self) -> &str {
        self.kind().label()
    }

    fn is_stochastic(&self) -> bool {
        self.kind().is_stochastic()
    }

    fn accel(&self, obs: &Observation, rng: &mut dyn RngCore) -> f64 {
        self.accel_of(obs, rng)
    }
}

/// JSON form `{"model": "idm", "params": {"v0": 30.0, ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub model: BaselineKind,
    pub params: BTreeMap<String, f64>,
}
