use rand::RngCore;

use crate::mccf::kinematic_step;
use crate::model::{CarFollowing, Observation};
use crate::rng;
use crate::trajdata::{CfState, Dataset, TrajectoryPair, DT};

/// Gap left behind the leader when a simulated follower overruns it (m).
pub const CRASH_CLEARANCE: f64 = 0.1;

/// Open-loop follower speeds for one pair. A step that ends with `d ≤ 0`
/// puts the follower `CRASH_CLEARANCE` behind the leader at the leader's
/// speed and carries on, so every step has a speed.
pub fn simulate_speeds(
    model: &dyn CarFollowing,
    pair: &TrajectoryPair,
    rng: &mut dyn RngCore,
) -> Vec<f64> {
    let n = pair.len();
    let mut speeds = Vec::with_capacity(n);
    if n == 0 {
        return speeds;
    }
    let l = pair.length_avg;
    let mut s = pair.state_at(0);
    let mut x = pair.points[0].x_f;
    speeds.push(s.v);
    for t in 0..n - 1 {
        let a = model.accel(&Observation::new(s, pair.points[t].a_l), rng);
        let lead = &pair.points[t + 1];
        let (mut next, mut x_next) = kinematic_step(&s, x, a, (lead.x_l, lead.v_l), l, DT);
        if !(next.d > 0.0) {
            x_next = lead.x_l - l - CRASH_CLEARANCE;
            next = CfState::new(lead.v_l, 0.0, CRASH_CLEARANCE);
        }
        speeds.push(next.v);
        s = next;
        x = x_next;
    }
    speeds
}

/// Pooled open-loop speed RMSE over every step of every pair:
/// `sqrt(Σ_j Σ_t (v_sim − v_true)² / Σ_j T_j)`.
///
/// Stochastic models draw from a stream fixed by `(noise_seed, pair_id)`, so
/// the cost is a deterministic function of the model.
pub fn rmse_v_objective(model: &dyn CarFollowing, train: &Dataset, noise_seed: u64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for pair in &train.pairs {
        let mut g = rng::pair_stream(noise_seed, &pair.pair_id, 0);
        let sim = simulate_speeds(model, pair, &mut g);
        for (v, p) in sim.iter().zip(&pair.points) {
            sum += (v - p.v_f).powi(2);
        }
        count += sim.len();
    }
    if count == 0 {
        return f64::INFINITY;
    }
    let rmse = (sum / count as f64).sqrt();
    if rmse.is_finite() {
        rmse
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajdata::{SplitTag, TrajectoryPoint};

    /// Replays the recorded follower acceleration by time lookup.
    struct Replay(Vec<f64>);

    impl CarFollowing for Replay {
        fn name(&self) -> &str {
            "replay"
        }
        fn is_stochastic(&self) -> bool {
            false
        }
        fn accel(&self, _: &Observation, _: &mut dyn RngCore) -> f64 {
            self.0[0]
        }
    }

    fn pair(id: &str, n: usize, v0: f64, a: f64) -> TrajectoryPair {
        let mut points = Vec::with_capacity(n);
        let (mut x, mut v) = (0.0, v0);
        for i in 0..n {
            points.push(TrajectoryPoint {
                t: i as f64 * DT,
                x_f: x,
                v_f: v,
                a_f: a,
                x_l: x + 30.0,
                v_l: v,
                a_l: a,
            });
            let v2 = (v + a * DT).max(0.0);
            x += 0.5 * (v + v2) * DT;
            v = v2;
        }
        TrajectoryPair {
            pair_id: id.into(),
            interaction_type: String::new(),
            points,
            length_avg: 5.0,
        }
    }

    #[test]
    fn perfect_model_scores_zero() {
        let ds = Dataset::new(vec![pair("a", 50, 10.0, 0.5)], SplitTag::Train);
        assert!(rmse_v_objective(&Replay(vec![0.5]), &ds, 0) < 1e-12);
    }

    #[test]
    fn pooled_denominator() {
        // Truth accelerates at 1 m/s² while the model holds speed: the error at
        // step t is 0.1·t m/s.
        let ds = Dataset::new(
            vec![pair("a", 10, 10.0, 1.0), pair("b", 30, 10.0, 1.0)],
            SplitTag::Train,
        );
        let sq = |n: usize| (0..n).map(|t| (0.1 * t as f64).powi(2)).sum::<f64>();
        let expect = ((sq(10) + sq(30)) / 40.0).sqrt();
        let got = rmse_v_objective(&Replay(vec![0.0]), &ds, 0);
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
    }

    #[test]
    fn crash_clamps_behind_leader() {
        let mut p = pair("a", 20, 10.0, 0.0);
        for q in &mut p.points {
            q.x_l = q.x_f + 7.0;
        }
        let speeds = simulate_speeds(&Replay(vec![5.0]), &p, &mut rng::stream(0, 0, 0));
        assert_eq!(speeds.len(), 20);
        assert!(speeds.iter().all(|v| v.is_finite()));
        // Overruns reset the follower to the leader's speed.
        assert!(speeds[1..].contains(&10.0));
    }
}
