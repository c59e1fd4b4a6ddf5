use crate::trajdata::CfState;

/// Advances the follower one step.
///
/// `v' = max(v + a·dt, 0)`, `x' = x + ½(v + v')·dt`, `d' = x_lead' − x' − l`.
/// `leader_next` is the leader's `(position, speed)` at the new time.
pub fn kinematic_step(
    s: &CfState,
    x_f: f64,
    accel: f64,
    leader_next: (f64, f64),
    length: f64,
    dt: f64,
) -> (CfState, f64) {
    let v_next = (s.v + accel * dt).max(0.0);
    let x_next = x_f + 0.5 * (s.v + v_next) * dt;
    let state = CfState {
        v: v_next,
        dv: v_next - leader_next.1,
        d: leader_next.0 - x_next - length,
    };
    (state, x_next)
}
