//! Spatially constrained state clustering.
//!
//! Every occupied grid bin starts as its own cluster. Clusters holding fewer
//! than `n_min` samples are merged, in batches, into their nearest neighbour
//! in range-normalised state space until no sparse cluster remains. The
//! result maps each training bin to a cluster that owns a pooled empirical
//! acceleration distribution.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::grid::{self, Ranges, StateGrid, DIMS};
use super::kdtree::KdTree;
use super::transitions::{estimate_transitions, TransitionMatrix};
use crate::error::{Error, Result};
use crate::stats;
use crate::trajdata::{CfState, Dataset};

/// Default minimum number of samples per cluster.
pub const DEFAULT_N_MIN: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: u32,
    /// Samples pooled into the cluster (before outlier filtering).
    pub count: usize,
    pub centroid: CfState,
    /// Centroid in range-normalised `(Δv, d, v)` coordinates.
    pub centroid_norm: [f64; DIMS],
    /// Acceleration samples, ascending.
    pub accel_samples: Vec<f64>,
}

/// Training provenance stored with a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub dataset_hash: String,
    pub n_min: usize,
    pub ranges: Ranges,
    pub n_pairs: usize,
    pub n_states: usize,
    pub occupied_bins: usize,
    pub merge_rounds: usize,
    pub out_of_range_samples: usize,
}

/// A trained MC-CF model: grid, clusters, bin map and transition matrix.
///
/// Immutable after construction; share it freely across threads.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    pub grid: StateGrid,
    pub clusters: Vec<Cluster>,
    pub transitions: TransitionMatrix,
    pub meta: ModelMeta,
    bin_to_cluster: HashMap<u64, u32>,
    index: KdTree,
    accel_means: Vec<f64>,
}

impl ClusterModel {
    /// Assembles a model and checks its structural invariants.
    pub fn from_parts(
        grid: StateGrid,
        clusters: Vec<Cluster>,
        bin_to_cluster: HashMap<u64, u32>,
        transitions: TransitionMatrix,
        meta: ModelMeta,
    ) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::Schema("model has no clusters".into()));
        }
        for (i, c) in clusters.iter().enumerate() {
            if c.id as usize != i {
                return Err(Error::Schema(format!(
                    "cluster at position {i} has id {}",
                    c.id
                )));
            }
            if c.accel_samples.is_empty() {
                return Err(Error::Schema(format!(
                    "cluster {i} has no acceleration samples"
                )));
            }
        }
        let n = clusters.len() as u32;
        if let Some((bin, id)) = bin_to_cluster.iter().find(|(_, &id)| id >= n) {
            return Err(Error::Schema(format!(
                "bin {bin} maps to unknown cluster {id}"
            )));
        }
        for (from, row) in &transitions.rows {
            if *from >= n || row.iter().any(|e| e.0 >= n) {
                return Err(Error::Schema(format!(
                    "transition row {from} references unknown cluster"
                )));
            }
            let sum: f64 = row.iter().map(|e| e.1).sum();
            if (sum - 1.0).abs() > 1e-9 || row.iter().any(|e| !(e.1 > 0.0 && e.1 <= 1.0)) {
                return Err(Error::Schema(format!(
                    "transition row {from} is not stochastic"
                )));
            }
        }
        let index = KdTree::build(clusters.iter().map(|c| (c.id, c.centroid_norm)));
        let accel_means = clusters
            .iter()
            .map(|c| stats::mean(&c.accel_samples))
            .collect();
        Ok(Self {
            grid,
            clusters,
            transitions,
            meta,
            bin_to_cluster,
            index,
            accel_means,
        })
    }

    pub fn bin_to_cluster(&self) -> &HashMap<u64, u32> {
        &self.bin_to_cluster
    }

    pub fn cluster(&self, id: u32) -> &Cluster {
        &self.clusters[id as usize]
    }

    /// Mean of the cluster's (filtered) acceleration distribution.
    pub fn accel_mean(&self, id: u32) -> f64 {
        self.accel_means[id as usize]
    }

    /// Cluster of the state's bin, or the nearest centroid in normalised
    /// space for bins never seen in training (lowest id on ties).
    pub fn nearest_cluster(&self, s: &CfState) -> u32 {
        if let Some(&id) = self.bin_to_cluster.get(&self.grid.bin_of(s)) {
            return id;
        }
        let q = self.grid.normalize(s);
        self.index
            .nearest(&q, None)
            .map(|n| n.id)
            .expect("model has at least one cluster")
    }

    /// Occupied bins divided by final clusters.
    pub fn compression_ratio(&self) -> f64 {
        self.meta.occupied_bins as f64 / self.clusters.len() as f64
    }
}

/// Removes samples outside `[Q1 − 1.5·IQR, Q3 + 1.5·IQR]` (type-7 quartiles).
/// Returns the survivors in ascending order; the median always survives.
pub fn accel_distribution(samples: &[f64]) -> Vec<f64> {
    if samples.is_empty() {
        return Vec::new();
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = stats::quantile_sorted(&sorted, 0.25);
    let q3 = stats::quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    sorted.retain(|&a| a >= lo && a <= hi);
    sorted
}

struct WorkCluster {
    alive: bool,
    n: usize,
    mu: [f64; DIMS],
    mu_norm: [f64; DIMS],
    accels: Vec<f64>,
    bins: Vec<u64>,
}

/// Runs the clustering, estimates transitions and filters the acceleration pools.
pub fn train_clusters(train: &Dataset, grid: StateGrid, n_min: usize) -> Result<ClusterModel> {
    if n_min == 0 {
        return Err(Error::Training("n_min must be at least 1".into()));
    }

    // 1. One cluster per occupied bin.
    let mut bins: HashMap<u64, WorkCluster> = HashMap::new();
    let mut n_states = 0usize;
    let mut out_of_range = 0usize;
    for pair in &train.pairs {
        for (i, s) in pair.states().iter().enumerate() {
            if !(s.v.is_finite() && s.dv.is_finite() && s.d.is_finite()) {
                return Err(Error::Training(format!(
                    "non-finite state in pair `{}` at step {i}",
                    pair.pair_id
                )));
            }
            if !grid.contains(s) {
                out_of_range += 1;
            }
            let c = grid::coords(&grid.clamp(s));
            let bin = grid.bin_of(s);
            let w = bins.entry(bin).or_insert_with(|| WorkCluster {
                alive: true,
                n: 0,
                mu: [0.0; DIMS],
                mu_norm: [0.0; DIMS],
                accels: Vec::new(),
                bins: vec![bin],
            });
            w.n += 1;
            for (m, x) in w.mu.iter_mut().zip(c) {
                *m += x;
            }
            w.accels.push(pair.points[i].a_f);
            n_states += 1;
        }
    }
    if n_states < n_min {
        return Err(Error::Training(format!(
            "{n_states} training samples is fewer than n_min = {n_min}"
        )));
    }

    let mut keys: Vec<u64> = bins.keys().copied().collect();
    keys.sort_unstable();
    let occupied_bins = keys.len();
    let mut work: Vec<WorkCluster> = keys
        .iter()
        .map(|k| {
            let mut w = bins.remove(k).expect("key present");
            let n = w.n as f64;
            for d in 0..DIMS {
                w.mu[d] /= n;
            }
            w.mu_norm = grid.normalize_coords(w.mu);
            w
        })
        .collect();

    // 2. Iterative batch merging of sparse clusters.
    let mut merge_rounds = 0usize;
    loop {
        let sparse: Vec<usize> = (0..work.len())
            .filter(|&i| work[i].alive && work[i].n < n_min)
            .collect();
        if sparse.is_empty() {
            break;
        }
        let index = KdTree::build(
            (0..work.len())
                .filter(|&i| work[i].alive)
                .map(|i| (i as u32, work[i].mu_norm)),
        );
        if index.len() < 2 {
            // Unreachable while total mass >= n_min, kept as a hard stop.
            break;
        }
        merge_rounds += 1;

        let mut tuples: Vec<(usize, usize, f64)> = sparse
            .iter()
            .map(|&src| {
                let nb = index
                    .nearest(&work[src].mu_norm, Some(src as u32))
                    .expect("at least two live clusters");
                (src, nb.id as usize, nb.dist2.sqrt())
            })
            .collect();
        tuples.sort_by(|a, b| {
            work[a.0]
                .n
                .cmp(&work[b.0].n)
                .then(a.2.total_cmp(&b.2))
                .then(a.0.cmp(&b.0))
        });

        let mut removed = vec![false; work.len()];
        for (src, dst, _) in tuples {
            if removed[src] || removed[dst] {
                continue;
            }
            merge_into(&mut work, src, dst);
            removed[src] = true;
        }
    }

    // Final compact ids in ascending order of the originating bin.
    let mut bin_to_cluster = HashMap::with_capacity(occupied_bins);
    let mut clusters = Vec::new();
    for w in work.into_iter().filter(|w| w.alive) {
        let id = clusters.len() as u32;
        for &b in &w.bins {
            bin_to_cluster.insert(b, id);
        }
        clusters.push(Cluster {
            id,
            count: w.n,
            centroid: grid::from_coords(w.mu),
            centroid_norm: w.mu_norm,
            accel_samples: w.accels,
        });
    }

    let meta = ModelMeta {
        dataset_hash: dataset_hash(train),
        n_min,
        ranges: grid.ranges,
        n_pairs: train.len(),
        n_states,
        occupied_bins,
        merge_rounds,
        out_of_range_samples: out_of_range,
    };

    // 3. Transition counts over the final map, then 4. outlier filtering of
    // the acceleration pools.
    let unfiltered = ClusterModel::from_parts(
        grid,
        clusters,
        bin_to_cluster,
        TransitionMatrix::default(),
        meta,
    )?;
    let transitions = estimate_transitions(train, &unfiltered);
    let ClusterModel {
        grid,
        mut clusters,
        meta,
        bin_to_cluster,
        ..
    } = unfiltered;
    for c in &mut clusters {
        c.accel_samples = accel_distribution(&c.accel_samples);
    }
    ClusterModel::from_parts(grid, clusters, bin_to_cluster, transitions, meta)
}

fn merge_into(work: &mut [WorkCluster], src: usize, dst: usize) {
    let (s, d) = if src < dst {
        let (a, b) = work.split_at_mut(dst);
        (&mut a[src], &mut b[0])
    } else {
        let (a, b) = work.split_at_mut(src);
        (&mut b[0], &mut a[dst])
    };
    let n = (d.n + s.n) as f64;
    let (wd, ws) = (d.n as f64 / n, s.n as f64 / n);
    for k in 0..DIMS {
        d.mu[k] = wd * d.mu[k] + ws * s.mu[k];
        d.mu_norm[k] = wd * d.mu_norm[k] + ws * s.mu_norm[k];
    }
    d.n += s.n;
    d.accels.append(&mut s.accels);
    d.bins.append(&mut s.bins);
    s.alive = false;
    s.n = 0;
}

/// SHA-256 over pair ids and the bit patterns of every point.
pub fn dataset_hash(ds: &Dataset) -> String {
    let mut h = Sha256::new();
    for pair in &ds.pairs {
        h.update(pair.pair_id.as_bytes());
        h.update([0u8]);
        h.update(pair.length_avg.to_le_bytes());
        for p in &pair.points {
            for x in [p.t, p.x_f, p.v_f, p.a_f, p.x_l, p.v_l, p.a_l] {
                h.update(x.to_le_bytes());
            }
        }
    }
    hex::encode(h.finalize())
}
