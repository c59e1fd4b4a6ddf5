use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::state_space::ClusterModel;
use crate::trajdata::CfState;

/// Probability assigned to a transition never seen in training.
pub const UNSEEN_TRANSITION_PROB: f64 = 1e-6;

/// `exp(mean log P(C_{t+1} | C_t))` along a state sequence.
pub fn geom_mean_prob(model: &ClusterModel, states: &[CfState]) -> Result<f64> {
    if states.len() < 2 {
        return Err(Error::Validation(
            "geometric-mean probability needs at least two states".into(),
        ));
    }
    let ids: Vec<u32> = states.iter().map(|s| model.nearest_cluster(s)).collect();
    let log_sum: f64 = ids
        .windows(2)
        .map(|w| {
            let p = model.transitions.prob(w[0], w[1]);
            if p > 0.0 {
                p.ln()
            } else {
                UNSEEN_TRANSITION_PROB.ln()
            }
        })
        .sum();
    Ok((log_sum / (ids.len() - 1) as f64).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub p: f64,
}

/// Two-sided Mann–Whitney U test: midranks for ties, normal approximation
/// with tie and continuity corrections.
pub fn mann_whitney(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    let (n1, n2) = (a.len(), b.len());
    if n1 < 2 || n2 < 2 {
        return Err(Error::Test("each sample needs at least two values".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Test("samples contain NaN".into()));
    }
    let mut all: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = all.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && all[j].0 == all[i].0 {
            j += 1;
        }
        let midrank = (i + j + 1) as f64 / 2.0;
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        rank_sum_a += midrank * all[i..j].iter().filter(|e| e.1).count() as f64;
        i = j;
    }
    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let u1 = rank_sum_a - n1f * (n1f + 1.0) / 2.0;
    let u2 = n1f * n2f - u1;
    let mu = n1f * n2f / 2.0;
    let sigma = (n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)))).sqrt();
    let p = if sigma > 0.0 {
        let z = (u1.max(u2) - mu - 0.5) / sigma;
        let normal = Normal::standard();
        (2.0 * normal.sf(z)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(MannWhitney { u: u1, p })
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, HashMap};

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;
    use crate::state_space::{Cluster, ModelMeta, StateGrid, TransitionMatrix};

    /// Two clusters split along Δv, reached through the nearest-centroid path.
    fn two_state(rows: &[(u32, u32, u64)]) -> ClusterModel {
        let grid = StateGrid::with_widths([(0.0, 2.0), (0.0, 1.0), (0.0, 1.0)], [1.0, 1.0, 1.0]);
        let clusters = (0..2)
            .map(|i| Cluster {
                id: i,
                count: 10,
                centroid: CfState::new(0.5, 0.5 + i as f64, 0.5),
                centroid_norm: [0.25 + 0.5 * i as f64, 0.5, 0.5],
                accel_samples: vec![0.0],
            })
            .collect();
        let mut counts: BTreeMap<u32, BTreeMap<u32, u64>> = BTreeMap::new();
        for &(a, b, c) in rows {
            counts.entry(a).or_default().insert(b, c);
        }
        let meta = ModelMeta {
            dataset_hash: String::new(),
            n_min: 10,
            ranges: grid.ranges,
            n_pairs: 0,
            n_states: 20,
            occupied_bins: 2,
            merge_rounds: 0,
            out_of_range_samples: 0,
        };
        ClusterModel::from_parts(
            grid,
            clusters,
            HashMap::new(),
            TransitionMatrix::from_counts(counts),
            meta,
        )
        .unwrap()
    }

    fn s(c: u32) -> CfState {
        CfState::new(0.5, 0.5 + c as f64, 0.5)
    }

    #[test]
    fn geometric_mean_examples() {
        let m = two_state(&[(0, 0, 1)]);
        assert_eq!(geom_mean_prob(&m, &[s(0), s(0), s(0)]).unwrap(), 1.0);
        let m = two_state(&[(0, 0, 1), (0, 1, 1)]);
        assert!((geom_mean_prob(&m, &[s(0), s(0), s(1)]).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(geom_mean_prob(&m, &[s(0), s(1)]).unwrap(), 0.5);
        let m = two_state(&[(0, 1, 1), (1, 0, 1), (1, 1, 3)]);
        assert!((geom_mean_prob(&m, &[s(0), s(1), s(0)]).unwrap() - 0.5).abs() < 1e-12);
        // Unseen transition falls back to the floor.
        let p = geom_mean_prob(&m, &[s(0), s(0)]).unwrap();
        assert!((p - UNSEEN_TRANSITION_PROB).abs() < 1e-18);
        assert!(geom_mean_prob(&m, &[s(0)]).is_err());
    }

    #[test]
    fn mann_whitney_examples() {
        let r = mann_whitney(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        let r = mann_whitney(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.u, 9.0);
        let x = [1.0, 2.0, 2.0, 3.0, 7.0];
        let r = mann_whitney(&x, &x).unwrap();
        assert_eq!(r.u, 12.5);
        assert!(r.p > 0.99);
        assert!(mann_whitney(&[1.0], &[1.0, 2.0]).is_err());
        let r = mann_whitney(&[2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn matches_reference_values() {
        // Values from the asymptotic two-sided test with continuity correction.
        let a = [19.0, 22.0, 16.0, 29.0, 24.0];
        let b = [20.0, 11.0, 17.0, 12.0];
        let r = mann_whitney(&a, &b).unwrap();
        assert_eq!(r.u, 17.0);
        // z = (17 − 10 − 0.5) / sqrt(20·10/12) = 1.5922
        let z: f64 = 6.5 / (200.0f64 / 12.0).sqrt();
        let expect = 2.0 * Normal::standard().sf(z);
        assert!((r.p - expect).abs() < 1e-12);
        assert!((r.p - 0.11134688653314041).abs() < 1e-9);
    }

    #[test]
    fn same_distribution_rarely_rejects() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut keep = 0;
        for _ in 0..100 {
            let a: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
            let b: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
            if mann_whitney(&a, &b).unwrap().p > 0.1 {
                keep += 1;
            }
        }
        assert!(keep >= 85, "{keep}");
    }

    proptest::proptest! {
        #[test]
        fn u_statistics_sum(a in proptest::collection::vec(0i32..20, 2..40), b in proptest::collection::vec(0i32..20, 2..40)) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ab = mann_whitney(&a, &b).unwrap();
            let ba = mann_whitney(&b, &a).unwrap();
            proptest::prop_assert!((ab.u + ba.u - (a.len() * b.len()) as f64).abs() < 1e-9);
            proptest::prop_assert!((ab.p - ba.p).abs() < 1e-12);
            proptest::prop_assert!((0.0..=1.0).contains(&ab.p));
        }
    }
}
