//! Trajectory metrics: one-step RMSE, DTW, displacement errors, overlap rate,
//! fair-comparison filtering, transition likelihood and Mann–Whitney tests.

mod displacement;
mod dtw;
mod eval;
mod prob;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mccf::{OneStep, Rollout};

pub use displacement::{ade, fde, min_over_rollouts};
pub use dtw::dtw_distance;
pub use eval::{
    evaluate, evaluate_probabilities, fair_filter, format_eval_table, format_prob_table,
    write_k_curve_csv, EvalConfig, EvalReport, KMetrics, ModelEval, ModelProb, ModelRollouts,
    ProbReport,
};
pub use prob::{geom_mean_prob, mann_whitney, MannWhitney, UNSEEN_TRANSITION_PROB};

/// Significance level used when reading Mann–Whitney results.
pub const SIGNIFICANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    /// Spacing.
    S,
    /// Speed.
    V,
    /// Acceleration.
    A,
}

impl OneStep {
    pub fn field(&self, f: Field) -> &[f64] {
        match f {
            Field::S => &self.d,
            Field::V => &self.v,
            Field::A => &self.a,
        }
    }
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Validation(format!(
            "length mismatch: {} predicted vs {} observed",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Validation("RMSE of an empty sequence".into()));
    }
    let ss: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok((ss / pred.len() as f64).sqrt())
}

/// RMSE pooled over every step of every pair.
pub fn rmse_one_step(pred: &[OneStep], truth: &[OneStep], field: Field) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Validation(
            "prediction and truth cover different pairs".into(),
        ));
    }
    let mut ss = 0.0;
    let mut n = 0usize;
    for (p, t) in pred.iter().zip(truth) {
        let (p, t) = (p.field(field), t.field(field));
        if p.len() != t.len() {
            return Err(Error::Validation(format!(
                "length mismatch: {} predicted vs {} observed",
                p.len(),
                t.len()
            )));
        }
        ss += p.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        n += p.len();
    }
    if n == 0 {
        return Err(Error::Validation("RMSE over zero steps".into()));
    }
    Ok((ss / n as f64).sqrt())
}

/// Fraction of single rollouts that ever reach `d ≤ 0`, including at `t = 0`.
pub fn overlap_rate(rollouts: &[Rollout]) -> f64 {
    if rollouts.is_empty() {
        return 0.0;
    }
    rollouts.iter().filter(|r| r.is_crashed()).count() as f64 / rollouts.len() as f64
}
