//! Synthetic leader/follower corpora for integration tests.

#![allow(dead_code)]

use mccf_core::baselines::{clamp_accel, Baseline, IdmParams, SidmParams};
use mccf_core::mccf::kinematic_step;
use mccf_core::model::{CarFollowing, Observation};
use mccf_core::rng::{self, StreamRng};
use mccf_core::trajdata::{CfState, Dataset, SplitTag, TrajectoryPair, TrajectoryPoint, DT};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

pub const LENGTH: f64 = 5.0;

/// Leader speeds: a smoothed random walk with occasional stops, in `[0, v_max]`.
pub fn leader_speeds(g: &mut StreamRng, n: usize, v0: f64, v_max: f64) -> Vec<(f64, f64)> {
    let jerk = Normal::new(0.0, 0.25).unwrap();
    let mut out = Vec::with_capacity(n);
    let (mut v, mut a) = (v0, 0.0f64);
    let mut brake_left = 0usize;
    for _ in 0..n {
        if brake_left == 0 && g.random::<f64>() < 0.004 {
            brake_left = g.random_range(20..60);
        }
        let target = if brake_left > 0 {
            brake_left -= 1;
            -2.0
        } else {
            0.0
        };
        a = 0.9 * a + 0.1 * target + jerk.sample(g);
        a = a.clamp(-3.0, 2.0);
        let v_next = (v + a * DT).clamp(0.0, v_max);
        let applied = (v_next - v) / DT;
        out.push((v, applied));
        v = v_next;
    }
    out
}

/// A synthetic driver; may carry state between steps of one pair.
pub trait Driver {
    fn reset(&mut self, _g: &mut StreamRng) {}
    fn accel(&mut self, obs: &Observation, g: &mut StreamRng) -> f64;
}

/// Any car-following model as a memoryless driver.
pub struct Memoryless<'a>(pub &'a dyn CarFollowing);

impl Driver for Memoryless<'_> {
    fn accel(&mut self, obs: &Observation, g: &mut StreamRng) -> f64 {
        self.0.accel(obs, g as &mut dyn RngCore)
    }
}

/// IDM plus Ornstein–Uhlenbeck acceleration noise (stationary std `sigma`,
/// one-step correlation `rho`).
pub struct OuDriver {
    pub idm: IdmParams,
    pub sigma: f64,
    pub rho: f64,
    eta: f64,
}

impl OuDriver {
    pub fn new(idm: IdmParams, sigma: f64, rho: f64) -> Self {
        Self {
            idm,
            sigma,
            rho,
            eta: 0.0,
        }
    }
}

impl Driver for OuDriver {
    fn reset(&mut self, _g: &mut StreamRng) {
        self.eta = 0.0;
    }

    fn accel(&mut self, obs: &Observation, g: &mut StreamRng) -> f64 {
        let xi: f64 = rand_distr::StandardNormal.sample(g);
        self.eta = self.rho * self.eta + (1.0 - self.rho * self.rho).sqrt() * self.sigma * xi;
        clamp_accel(mccf_core::baselines::idm_accel(&self.idm, &obs.state) + self.eta)
    }
}

/// A driver population: each pair draws its own IDM parameters and
/// Ornstein–Uhlenbeck noise level.
pub struct Population {
    driver: OuDriver,
    rho: f64,
}

impl Population {
    pub fn new(rho: f64) -> Self {
        Self {
            driver: OuDriver::new(urban_idm(), 0.0, rho),
            rho,
        }
    }
}

impl Driver for Population {
    fn reset(&mut self, g: &mut StreamRng) {
        let idm = IdmParams {
            v0: g.random_range(10.0..20.0),
            t_headway: g.random_range(0.8..2.0),
            a_max: g.random_range(0.8..2.0),
            b: g.random_range(1.5..3.0),
            s0: g.random_range(1.0..3.0),
            delta: 4.0,
        };
        self.driver = OuDriver::new(idm, g.random_range(0.1..0.5), self.rho);
    }

    fn accel(&mut self, obs: &Observation, g: &mut StreamRng) -> f64 {
        self.driver.accel(obs, g)
    }
}

/// Simulates `driver` behind a random leader, starting `gap` metres back
/// at speed `v0`. Returns `None` if the follower crashes.
pub fn synth_pair(
    id: &str,
    g: &mut StreamRng,
    n: usize,
    v0: f64,
    gap: f64,
    driver: &mut dyn Driver,
) -> Option<TrajectoryPair> {
    driver.reset(g);
    let lead = leader_speeds(g, n, v0, 25.0);
    let mut x_l = gap + LENGTH;
    let mut lead_pos = Vec::with_capacity(n);
    for &(v, a) in &lead {
        lead_pos.push(x_l);
        let v2 = (v + a * DT).max(0.0);
        x_l += 0.5 * (v + v2) * DT;
    }
    let mut s = CfState::new(v0, 0.0, gap);
    let mut x = 0.0;
    let mut points = Vec::with_capacity(n);
    for t in 0..n {
        let a = if t + 1 < n {
            driver.accel(&Observation::new(s, lead[t].1), g)
        } else {
            points.last().map_or(0.0, |p: &TrajectoryPoint| p.a_f)
        };
        points.push(TrajectoryPoint {
            t: t as f64 * DT,
            x_f: x,
            v_f: s.v,
            a_f: a,
            x_l: lead_pos[t],
            v_l: lead[t].0,
            a_l: lead[t].1,
        });
        if t + 1 < n {
            let (next, x_next) =
                kinematic_step(&s, x, a, (lead_pos[t + 1], lead[t + 1].0), LENGTH, DT);
            if next.d <= 0.0 {
                return None;
            }
            s = next;
            x = x_next;
        }
    }
    Some(TrajectoryPair {
        pair_id: id.to_string(),
        interaction_type: "synthetic".into(),
        points,
        length_avg: LENGTH,
    })
}

/// `n_pairs` crash-free pairs of `steps` steps driven by `driver`.
pub fn corpus(seed: u64, n_pairs: usize, steps: usize, driver: &mut dyn Driver) -> Dataset {
    let mut g = rng::stream(seed, 0x5eed, 0);
    let mut pairs = Vec::with_capacity(n_pairs);
    let mut k = 0;
    while pairs.len() < n_pairs {
        let v0 = g.random_range(0.0..15.0);
        let gap = g.random_range(5.0..30.0);
        if let Some(p) = synth_pair(&format!("s{seed}-{k}"), &mut g, steps, v0, gap, driver) {
            pairs.push(p);
        }
        k += 1;
    }
    Dataset::new(pairs, SplitTag::Unsplit)
}

pub fn urban_idm() -> IdmParams {
    IdmParams {
        v0: 15.0,
        t_headway: 1.2,
        a_max: 1.5,
        b: 2.0,
        s0: 2.0,
        delta: 4.0,
    }
}

/// IDM with Gaussian acceleration noise.
pub fn noisy_driver(sigma: f64) -> Baseline {
    Baseline::Sidm(SidmParams {
        idm: urban_idm(),
        sigma,
    })
}

/// IDM with broad uniform noise and, while closing in, occasional
/// aggressive positive accelerations.
pub struct AggressiveDriver {
    pub idm: IdmParams,
    pub spread: f64,
    pub burst_prob: f64,
    pub burst: f64,
}

impl Driver for AggressiveDriver {
    fn accel(&mut self, obs: &Observation, rng: &mut StreamRng) -> f64 {
        let base = mccf_core::baselines::idm_accel(&self.idm, &obs.state);
        let noise = rng.random_range(-self.spread..=self.spread);
        let burst = if obs.state.dv > 0.0 && rng.random::<f64>() < self.burst_prob {
            self.burst
        } else {
            0.0
        };
        clamp_accel(base + noise + burst)
    }
}

/// A pair whose derived states are exactly `states` (follower parked at
/// x = 0, 10 Hz timestamps), with follower accelerations `accels`.
pub fn pair_from_states(id: &str, states: &[CfState], accels: &[f64]) -> TrajectoryPair {
    let points = states
        .iter()
        .zip(accels)
        .enumerate()
        .map(|(i, (s, &a))| TrajectoryPoint {
            t: i as f64 * DT,
            x_f: 0.0,
            v_f: s.v,
            a_f: a,
            x_l: s.d + LENGTH,
            v_l: s.v - s.dv,
            a_l: 0.0,
        })
        .collect();
    TrajectoryPair {
        pair_id: id.into(),
        interaction_type: String::new(),
        points,
        length_avg: LENGTH,
    }
}
