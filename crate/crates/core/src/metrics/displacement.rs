use crate::mccf::Rollout;

/// Mean absolute longitudinal displacement over the common length.
pub fn ade(pred: &[f64], truth: &[f64]) -> f64 {
    let n = pred.len().min(truth.len());
    if n == 0 {
        return f64::NAN;
    }
    pred.iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / n as f64
}

/// Absolute displacement at the final common step.
pub fn fde(pred: &[f64], truth: &[f64]) -> f64 {
    let n = pred.len().min(truth.len());
    if n == 0 {
        return f64::NAN;
    }
    (pred[n - 1] - truth[n - 1]).abs()
}

/// Minimum of `metric` over the rollouts that did not crash; `None` when
/// every rollout crashed.
pub fn min_over_rollouts<F>(rollouts: &[Rollout], metric: F) -> Option<f64>
where
    F: Fn(&Rollout) -> f64,
{
    rollouts
        .iter()
        .filter(|r| !r.is_crashed())
        .map(metric)
        .reduce(f64::min)
}
