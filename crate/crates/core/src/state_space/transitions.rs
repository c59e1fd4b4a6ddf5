use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::cluster::ClusterModel;
use crate::trajdata::Dataset;

/// Sparse row-stochastic cluster-to-cluster transition probabilities.
///
/// Rows and their entries are ordered by cluster id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub rows: BTreeMap<u32, Vec<(u32, f64)>>,
    pub counts: BTreeMap<u32, Vec<(u32, u64)>>,
}

impl TransitionMatrix {
    /// Row-normalises raw counts.
    pub fn from_counts(counts: BTreeMap<u32, BTreeMap<u32, u64>>) -> Self {
        let mut rows = BTreeMap::new();
        let mut raw = BTreeMap::new();
        for (from, row) in counts {
            let total: u64 = row.values().sum();
            if total == 0 {
                continue;
            }
            rows.insert(
                from,
                row.iter()
                    .map(|(&to, &c)| (to, c as f64 / total as f64))
                    .collect(),
            );
            raw.insert(from, row.into_iter().collect());
        }
        Self { rows, counts: raw }
    }

    /// Outgoing `(to, probability)` entries; empty for a cluster with no observed exits.
    pub fn row(&self, from: u32) -> &[(u32, f64)] {
        self.rows.get(&from).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn prob(&self, from: u32, to: u32) -> f64 {
        let row = self.row(from);
        row.binary_search_by_key(&to, |e| e.0)
            .map(|i| row[i].1)
            .unwrap_or(0.0)
    }

    pub fn total_count(&self) -> u64 {
        self.counts.values().flatten().map(|e| e.1).sum()
    }

    /// Most probable next cluster, lowest id on ties.
    pub fn most_probable(&self, from: u32) -> Option<u32> {
        let mut best: Option<(u32, f64)> = None;
        for &(to, p) in self.row(from) {
            // Entries are id-ascending, so strict `>` keeps the lowest id on ties.
            if best.is_none_or(|b| p > b.1) {
                best = Some((to, p));
            }
        }
        best.map(|b| b.0)
    }

    /// Draws the next cluster in proportion to the row probabilities.
    pub fn sample(&self, from: u32, rng: &mut dyn RngCore) -> Option<u32> {
        let row = self.row(from);
        let last = row.last()?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(to, p) in row {
            acc += p;
            if u < acc {
                return Some(to);
            }
        }
        Some(last.0)
    }
}

/// Counts consecutive-step cluster transitions within each pair (never across
/// pairs) using the model's bin map, then row-normalises.
pub fn estimate_transitions(train: &Dataset, model: &ClusterModel) -> TransitionMatrix {
    let mut counts: BTreeMap<u32, BTreeMap<u32, u64>> = BTreeMap::new();
    for pair in &train.pairs {
        let ids: Vec<u32> = pair
            .states()
            .iter()
            .map(|s| model.nearest_cluster(s))
            .collect();
        for w in ids.windows(2) {
            *counts.entry(w[0]).or_default().entry(w[1]).or_default() += 1;
        }
    }
    TransitionMatrix::from_counts(counts)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn matrix(entries: &[(u32, u32, u64)]) -> TransitionMatrix {
        let mut counts: BTreeMap<u32, BTreeMap<u32, u64>> = BTreeMap::new();
        for &(a, b, c) in entries {
            counts.entry(a).or_default().insert(b, c);
        }
        TransitionMatrix::from_counts(counts)
    }

    #[test]
    fn normalisation_example() {
        let m = matrix(&[(0, 0, 3), (0, 1, 1)]);
        assert_eq!(m.prob(0, 0), 0.75);
        assert_eq!(m.prob(0, 1), 0.25);
        assert_eq!(m.prob(1, 0), 0.0);
        assert_eq!(m.total_count(), 4);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        let m = matrix(&[(0, 1, 7), (0, 2, 3)]);
        assert_eq!(m.most_probable(0), Some(1));
        let m = matrix(&[(0, 2, 5), (0, 1, 5)]);
        assert_eq!(m.most_probable(0), Some(1));
        assert_eq!(m.most_probable(9), None);
    }

    #[test]
    fn sampling_frequencies_match_row() {
        let m = matrix(&[(0, 0, 2), (0, 1, 5), (0, 2, 3)]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut hits = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            hits[m.sample(0, &mut rng).unwrap() as usize] += 1;
        }
        for (i, &p) in [0.2, 0.5, 0.3].iter().enumerate() {
            assert!((hits[i] as f64 / n as f64 - p).abs() < 0.01, "{hits:?}");
        }
        assert_eq!(m.sample(3, &mut rng), None);
    }
}
