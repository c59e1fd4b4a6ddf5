use std::io::Write;

use rand::RngCore;
use rayon::prelude::*;

use super::kinematics::kinematic_step;
use crate::error::Result;
use crate::model::{CarFollowing, Observation};
use crate::rng;
use crate::trajdata::{CfState, TrajectoryPair, DT};

/// One simulated follower trajectory against a recorded leader.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub states: Vec<CfState>,
    pub positions: Vec<f64>,
    pub speeds: Vec<f64>,
    /// `accels[t]` is applied between steps `t` and `t + 1`.
    pub accels: Vec<f64>,
    /// Index of the first step with `d ≤ 0`; the rollout stops there.
    pub crashed: Option<usize>,
}

impl Rollout {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_crashed(&self) -> bool {
        self.crashed.is_some()
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.d).collect()
    }
}

/// Drives `model` from the pair's initial follower state along the recorded
/// leader, feeding each predicted state back in.
pub fn simulate_follower(
    model: &dyn CarFollowing,
    pair: &TrajectoryPair,
    rng: &mut dyn RngCore,
) -> Rollout {
    let n = pair.len();
    let mut out = Rollout {
        states: Vec::with_capacity(n),
        positions: Vec::with_capacity(n),
        speeds: Vec::with_capacity(n),
        accels: Vec::with_capacity(n.saturating_sub(1)),
        crashed: None,
    };
    if n == 0 {
        return out;
    }
    let mut s = pair.state_at(0);
    let mut x = pair.points[0].x_f;
    out.states.push(s);
    out.positions.push(x);
    out.speeds.push(s.v);
    if s.d <= 0.0 {
        out.crashed = Some(0);
        return out;
    }
    for t in 0..n - 1 {
        let a = model.accel(&Observation::new(s, pair.points[t].a_l), rng);
        let lead = &pair.points[t + 1];
        let (next, x_next) = kinematic_step(&s, x, a, (lead.x_l, lead.v_l), pair.length_avg, DT);
        out.accels.push(a);
        out.states.push(next);
        out.positions.push(x_next);
        out.speeds.push(next.v);
        s = next;
        x = x_next;
        if s.d <= 0.0 {
            out.crashed = Some(t + 1);
            break;
        }
    }
    out
}

/// `k` open-loop rollouts, each on its own stream keyed by `(seed, pair_id, i)`.
/// A deterministic model is simulated once and copied.
pub fn open_loop_rollout(
    model: &dyn CarFollowing,
    pair: &TrajectoryPair,
    k: usize,
    seed: u64,
) -> Vec<Rollout> {
    if k == 0 {
        return Vec::new();
    }
    if !model.is_stochastic() {
        let r = simulate_follower(model, pair, &mut rng::pair_stream(seed, &pair.pair_id, 0));
        return vec![r; k];
    }
    (0..k)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::pair_stream(seed, &pair.pair_id, i as u32);
            simulate_follower(model, pair, &mut g)
        })
        .collect()
}

/// Per-step spacing, speed and acceleration, `T − 1` entries for a `T`-step
/// pair. `d[t]` and `v[t]` belong to step `t + 1`; `a[t]` to step `t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OneStep {
    pub d: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
}

/// Resets to the recorded state at every step and advances once.
pub fn one_step_predict(model: &dyn CarFollowing, pair: &TrajectoryPair, seed: u64) -> OneStep {
    let mut g = rng::pair_stream(seed, &pair.pair_id, 0);
    let mut out = OneStep::default();
    for t in 0..pair.len().saturating_sub(1) {
        let p = &pair.points[t];
        let s = pair.state_at(t);
        let a = model.accel(&Observation::new(s, p.a_l), &mut g);
        let lead = &pair.points[t + 1];
        let (next, _) = kinematic_step(&s, p.x_f, a, (lead.x_l, lead.v_l), pair.length_avg, DT);
        out.d.push(next.d);
        out.v.push(next.v);
        out.a.push(a);
    }
    out
}

/// Recorded values aligned with [`one_step_predict`].
pub fn one_step_truth(pair: &TrajectoryPair) -> OneStep {
    let states = pair.states();
    let n = pair.len().saturating_sub(1);
    OneStep {
        d: states.iter().skip(1).map(|s| s.d).collect(),
        v: states.iter().skip(1).map(|s| s.v).collect(),
        a: pair.points.iter().take(n).map(|p| p.a_f).collect(),
    }
}

/// Writes rollouts as `rollout_id,t,x_f,v_f,a_f,d,crashed`. The last row of a
/// rollout has no applied acceleration and leaves `a_f` empty.
pub fn write_rollouts_csv<W: Write>(
    pair: &TrajectoryPair,
    rollouts: &[Rollout],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["rollout_id", "t", "x_f", "v_f", "a_f", "d", "crashed"])?;
    for (id, r) in rollouts.iter().enumerate() {
        let crashed = if r.is_crashed() { "1" } else { "0" };
        for (i, s) in r.states.iter().enumerate() {
            let a = r.accels.get(i).map(|a| a.to_string()).unwrap_or_default();
            w.write_record([
                id.to_string(),
                pair.points[i].t.to_string(),
                r.positions[i].to_string(),
                s.v.to_string(),
                a,
                s.d.to_string(),
                crashed.to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::trajdata::TrajectoryPoint;

    struct Const(f64);

    impl CarFollowing for Const {
        fn name(&self) -> &str {
            "const"
        }
        fn is_stochastic(&self) -> bool {
            false
        }
        fn accel(&self, _: &Observation, _: &mut dyn RngCore) -> f64 {
            self.0
        }
    }

    struct Noise;

    impl CarFollowing for Noise {
        fn name(&self) -> &str {
            "noise"
        }
        fn is_stochastic(&self) -> bool {
            true
        }
        fn accel(&self, _: &Observation, rng: &mut dyn RngCore) -> f64 {
            rng.random_range(-1.0..1.0)
        }
    }

    fn cruising_pair(n: usize, gap: f64, v_lead: f64) -> TrajectoryPair {
        let points = (0..n)
            .map(|i| {
                let t = i as f64 * DT;
                TrajectoryPoint {
                    t,
                    x_f: 10.0 * t,
                    v_f: 10.0,
                    a_f: 0.0,
                    x_l: gap + 5.0 + v_lead * t,
                    v_l: v_lead,
                    a_l: 0.0,
                }
            })
            .collect();
        TrajectoryPair {
            pair_id: "p".into(),
            interaction_type: String::new(),
            points,
            length_avg: 5.0,
        }
    }

    #[test]
    fn perfect_predictor_matches_truth() {
        let pair = cruising_pair(30, 20.0, 10.0);
        let pred = one_step_predict(&Const(0.0), &pair, 0);
        let truth = one_step_truth(&pair);
        assert_eq!(pred.v.len(), 29);
        for i in 0..29 {
            assert!((pred.v[i] - truth.v[i]).abs() < 1e-12);
            assert!((pred.d[i] - truth.d[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_copies() {
        let pair = cruising_pair(30, 20.0, 10.0);
        let rs = open_loop_rollout(&Const(0.3), &pair, 3, 0);
        assert_eq!(rs.len(), 3);
        assert!(rs.iter().all(|r| r == &rs[0]));
    }

    #[test]
    fn stochastic_reproducible_and_distinct() {
        let pair = cruising_pair(50, 20.0, 10.0);
        let a = open_loop_rollout(&Noise, &pair, 4, 11);
        let b = open_loop_rollout(&Noise, &pair, 4, 11);
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn crash_truncates() {
        // Leader stopped 2 m ahead, follower at 10 m/s and not braking.
        let pair = cruising_pair(40, 2.0, 0.0);
        let r = simulate_follower(&Const(0.0), &pair, &mut rng::stream(0, 0, 0));
        let at = r.crashed.expect("should crash");
        assert_eq!(r.len(), at + 1);
        assert!(r.states[at].d <= 0.0);
        assert!(r.states[..at].iter().all(|s| s.d > 0.0));
        assert_eq!(r.accels.len(), at);
    }

    #[test]
    fn rollout_invariants() {
        let pair = cruising_pair(200, 30.0, 10.0);
        for r in open_loop_rollout(&Noise, &pair, 5, 3) {
            assert!(r.speeds.iter().all(|&v| v >= 0.0));
            assert!(r.positions.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn csv_export_columns() {
        let pair = cruising_pair(3, 20.0, 10.0);
        let rs = open_loop_rollout(&Const(0.0), &pair, 2, 0);
        let mut buf = Vec::new();
        write_rollouts_csv(&pair, &rs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "rollout_id,t,x_f,v_f,a_f,d,crashed");
        assert_eq!(lines.len(), 7);
        assert!(lines[3].starts_with("0,") && lines[3].contains(",,"));
    }
}
