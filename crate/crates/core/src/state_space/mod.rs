//! Discretised state space, cluster training and transition estimation.

pub mod cluster;
pub mod grid;
pub mod kdtree;
pub mod persist;
pub mod transitions;

pub use cluster::{
    accel_distribution, train_clusters, Cluster, ClusterModel, ModelMeta, DEFAULT_N_MIN,
};
pub use grid::{
    build_grid, fd_bin_width, fd_num_bins, BinIndex, GridReport, Ranges, StateGrid,
    EXTENDED_RANGES, URBAN_RANGES,
};
pub use persist::{load_model, save_model, MODEL_SCHEMA};
pub use transitions::{estimate_transitions, TransitionMatrix};

use crate::error::Result;
use crate::trajdata::Dataset;

/// Builds the grid from `train`, then clusters and estimates transitions.
pub fn train_model(
    train: &Dataset,
    ranges: Ranges,
    n_min: usize,
) -> Result<(ClusterModel, GridReport)> {
    let (grid, report) = build_grid(train, ranges)?;
    Ok((train_clusters(train, grid, n_min)?, report))
}
