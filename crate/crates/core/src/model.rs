//! The interface shared by MC-CF and the parametric baselines.

use rand::RngCore;

use crate::trajdata::CfState;

/// What a follower model sees at one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub state: CfState,
    /// Leader acceleration (m/s²); only some models use it.
    pub a_lead: f64,
}

impl Observation {
    pub fn new(state: CfState, a_lead: f64) -> Self {
        Self { state, a_lead }
    }
}

/// A car-following rule: current observation in, follower acceleration out.
pub trait CarFollowing: Send + Sync {
    fn name(&self) -> &str;

    /// Whether repeated calls on the same observation can differ.
    fn is_stochastic(&self) -> bool;

    fn accel(&self, obs: &Observation, rng: &mut dyn RngCore) -> f64;
}
