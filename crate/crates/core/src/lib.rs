//! Markov chain car-following (MC-CF) toolkit.
//!
//! Trains an empirical, calibration-free car-following model from
//! leader/follower trajectories, benchmarks it against classical parametric
//! models, scores everything with a trajectory metric suite and runs
//! closed-loop ring-road experiments.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod calibrate;
pub mod error;
pub mod mccf;
pub mod metrics;
pub mod model;
pub mod ringsim;
pub mod rng;
pub mod state_space;
pub mod stats;
pub mod trajdata;

pub use error::{Error, ErrorKind, Result};
pub use model::{CarFollowing, Observation};
pub use trajdata::{CfState, Dataset, TrajectoryPair, TrajectoryPoint};
