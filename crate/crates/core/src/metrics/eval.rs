use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    ade, dtw_distance, fde, geom_mean_prob, mann_whitney, min_over_rollouts, overlap_rate,
    rmse_one_step, Field, SIGNIFICANCE,
};
use crate::error::{Error, Result};
use crate::mccf::{one_step_predict, one_step_truth, open_loop_rollout, Rollout};
use crate::model::CarFollowing;
use crate::state_space::ClusterModel;
use crate::stats;
use crate::trajdata::{Dataset, TrajectoryPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Rollout counts for stochastic models.
    pub k_values: Vec<usize>,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k_values: vec![1, 3, 6, 10, 15],
            seed: 0,
        }
    }
}

impl EvalConfig {
    fn normalized_k(&self) -> Result<Vec<usize>> {
        let mut ks = self.k_values.clone();
        ks.sort_unstable();
        ks.dedup();
        match ks.first() {
            None => Err(Error::Validation("k_values is empty".into())),
            Some(0) => Err(Error::Validation("k_values must be positive".into())),
            _ => Ok(ks),
        }
    }
}

/// Rollouts of one model over every pair of an evaluation set.
#[derive(Debug, Clone)]
pub struct ModelRollouts {
    pub name: String,
    pub stochastic: bool,
    pub per_pair: Vec<Vec<Rollout>>,
}

/// Pairs on which no deterministic model crashed and every stochastic model
/// has at least one crash-free rollout among its first `k`.
pub fn fair_filter(results: &[ModelRollouts], k: usize) -> Vec<usize> {
    let n = results.first().map_or(0, |m| m.per_pair.len());
    (0..n)
        .filter(|&i| {
            results.iter().all(|m| {
                let rs = &m.per_pair[i];
                let used = if m.stochastic { k.min(rs.len()) } else { 1 };
                rs[..used].iter().any(|r| !r.is_crashed())
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMetrics {
    pub k: usize,
    /// Rollouts per pair actually drawn from this model.
    pub rollouts: usize,
    /// Pairs passing the fair-comparison filter at this `k`.
    pub pairs: usize,
    pub min_dtw_s: Option<f64>,
    pub min_dtw_v: Option<f64>,
    pub min_ade: Option<f64>,
    pub min_fde: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEval {
    pub name: String,
    pub stochastic: bool,
    pub rmse_s: f64,
    pub rmse_v: f64,
    pub rmse_a: f64,
    pub one_step_pairs: usize,
    pub open_loop: Vec<KMetrics>,
    pub overlap_rate: f64,
    pub overlap_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total_pairs: usize,
    pub k_values: Vec<usize>,
    pub models: Vec<ModelEval>,
}

struct PairTruth {
    spacing: Vec<f64>,
    speed: Vec<f64>,
    position: Vec<f64>,
}

impl PairTruth {
    fn of(pair: &TrajectoryPair) -> Self {
        Self {
            spacing: pair.states().iter().map(|s| s.d).collect(),
            speed: pair.points.iter().map(|p| p.v_f).collect(),
            position: pair.points.iter().map(|p| p.x_f).collect(),
        }
    }
}

fn mean_of(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| stats::mean(values))
}

/// One-step and open-loop evaluation of `models` on `test`.
///
/// Stochastic models draw `max(k_values)` rollouts per pair; the row for `k`
/// uses the first `k`, so rows are nested. Deterministic models draw one.
pub fn evaluate(
    models: &[&dyn CarFollowing],
    test: &Dataset,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let ks = cfg.normalized_k()?;
    if test.is_empty() {
        return Err(Error::Validation("evaluation set has no pairs".into()));
    }
    if let Some(p) = test.pairs.iter().find(|p| p.len() < 2) {
        return Err(Error::Validation(format!(
            "pair {} has fewer than two steps",
            p.pair_id
        )));
    }
    let k_max = *ks.last().expect("nonempty");
    let truths: Vec<PairTruth> = test.pairs.par_iter().map(PairTruth::of).collect();
    let one_truth: Vec<_> = test.pairs.iter().map(one_step_truth).collect();

    let rollouts: Vec<ModelRollouts> = models
        .iter()
        .map(|m| {
            let k = if m.is_stochastic() { k_max } else { 1 };
            ModelRollouts {
                name: m.name().to_string(),
                stochastic: m.is_stochastic(),
                per_pair: test
                    .pairs
                    .par_iter()
                    .map(|p| open_loop_rollout(*m, p, k, cfg.seed))
                    .collect(),
            }
        })
        .collect();
    let eligible: Vec<Vec<usize>> = ks.iter().map(|&k| fair_filter(&rollouts, k)).collect();

    let mut out = Vec::with_capacity(models.len());
    for (m, mr) in models.iter().zip(&rollouts) {
        let preds: Vec<_> = test
            .pairs
            .par_iter()
            .map(|p| one_step_predict(*m, p, cfg.seed))
            .collect();
        let open_loop = ks
            .iter()
            .zip(&eligible)
            .map(|(&k, pairs)| {
                let used = if mr.stochastic { k } else { 1 };
                let per_pair: Vec<[f64; 4]> = pairs
                    .par_iter()
                    .map(|&i| {
                        let rs = &mr.per_pair[i][..used];
                        let t = &truths[i];
                        let min = |f: &dyn Fn(&Rollout) -> f64| {
                            min_over_rollouts(rs, f)
                                .expect("eligible pairs have a crash-free rollout")
                        };
                        [
                            min(&|r| dtw_distance(&r.spacings(), &t.spacing).unwrap_or(f64::NAN)),
                            min(&|r| dtw_distance(&r.speeds, &t.speed).unwrap_or(f64::NAN)),
                            min(&|r| ade(&r.positions, &t.position)),
                            min(&|r| fde(&r.positions, &t.position)),
                        ]
                    })
                    .collect();
                let col = |j: usize| mean_of(&per_pair.iter().map(|v| v[j]).collect::<Vec<_>>());
                KMetrics {
                    k,
                    rollouts: used,
                    pairs: pairs.len(),
                    min_dtw_s: col(0),
                    min_dtw_v: col(1),
                    min_ade: col(2),
                    min_fde: col(3),
                }
            })
            .collect();
        let singles: Vec<Rollout> = mr.per_pair.iter().map(|rs| rs[0].clone()).collect();
        out.push(ModelEval {
            name: mr.name.clone(),
            stochastic: mr.stochastic,
            rmse_s: rmse_one_step(&preds, &one_truth, Field::S)?,
            rmse_v: rmse_one_step(&preds, &one_truth, Field::V)?,
            rmse_a: rmse_one_step(&preds, &one_truth, Field::A)?,
            one_step_pairs: preds.len(),
            open_loop,
            overlap_rate: overlap_rate(&singles),
            overlap_pairs: singles.len(),
        });
    }
    Ok(EvalReport {
        total_pairs: test.len(),
        k_values: ks,
        models: out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProb {
    pub name: String,
    pub probs: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    /// U statistic of the model sample against the ground truth sample.
    pub u: f64,
    pub p: f64,
    /// Whether the distributions differ at the 0.1 level.
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbReport {
    pub truth: Vec<f64>,
    pub truth_mean: f64,
    pub truth_median: f64,
    pub models: Vec<ModelProb>,
}

/// Geometric-mean transition probabilities of recorded follower trajectories
/// and of one open-loop rollout per pair and model, all scored under
/// `prob_model`, with a Mann–Whitney comparison of each model against the
/// recorded set.
pub fn evaluate_probabilities(
    prob_model: &ClusterModel,
    test: &Dataset,
    models: &[&dyn CarFollowing],
    seed: u64,
) -> Result<ProbReport> {
    let truth: Vec<f64> = test
        .pairs
        .par_iter()
        .filter(|p| p.len() >= 2)
        .map(|p| geom_mean_prob(prob_model, &p.states()))
        .collect::<Result<_>>()?;
    if truth.len() < 2 {
        return Err(Error::Test(
            "need at least two pairs with two or more steps".into(),
        ));
    }
    let mut out = Vec::with_capacity(models.len());
    for m in models {
        let probs: Vec<f64> = test
            .pairs
            .par_iter()
            .filter_map(|p| {
                let r = open_loop_rollout(*m, p, 1, seed).swap_remove(0);
                (r.len() >= 2).then(|| geom_mean_prob(prob_model, &r.states))
            })
            .collect::<Result<_>>()?;
        let mw = mann_whitney(&probs, &truth)?;
        out.push(ModelProb {
            name: m.name().to_string(),
            mean: stats::mean(&probs),
            median: stats::median(&probs),
            u: mw.u,
            p: mw.p,
            rejected: mw.p <= SIGNIFICANCE,
            probs,
        });
    }
    Ok(ProbReport {
        truth_mean: stats::mean(&truth),
        truth_median: stats::median(&truth),
        truth,
        models: out,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

/// Aligned text table, one block per `k`.
pub fn format_eval_table(report: &EvalReport) -> String {
    let mut s = String::new();
    let header = format!(
        "{:<28} {:>3} {:>9} {:>9} {:>9} {:>11} {:>11} {:>9} {:>9} {:>7} {:>6}",
        "Model",
        "K",
        "RMSE(s)",
        "RMSE(v)",
        "RMSE(a)",
        "minDTW(s)",
        "minDTW(v)",
        "minADE",
        "minFDE",
        "OR",
        "pairs"
    );
    let _ = writeln!(s, "{header}");
    let _ = writeln!(s, "{}", "-".repeat(header.len()));
    for (i, &k) in report.k_values.iter().enumerate() {
        for m in &report.models {
            let o = &m.open_loop[i];
            let _ = writeln!(
                s,
                "{:<28} {:>3} {:>9.3} {:>9.3} {:>9.3} {:>11} {:>11} {:>9} {:>9} {:>7.3} {:>6}",
                m.name,
                if m.stochastic { k } else { 1 },
                m.rmse_s,
                m.rmse_v,
                m.rmse_a,
                cell(o.min_dtw_s),
                cell(o.min_dtw_v),
                cell(o.min_ade),
                cell(o.min_fde),
                m.overlap_rate,
                o.pairs
            );
        }
    }
    s
}

pub fn format_prob_table(report: &ProbReport) -> String {
    let mut s = String::new();
    let header = format!(
        "{:<28} {:>6} {:>10} {:>10} {:>14} {:>10}",
        "Trajectories", "n", "mean", "median", "U", "p"
    );
    let _ = writeln!(s, "{header}");
    let _ = writeln!(s, "{}", "-".repeat(header.len()));
    let _ = writeln!(
        s,
        "{:<28} {:>6} {:>10.4} {:>10.4} {:>14} {:>10}",
        "Ground truth",
        report.truth.len(),
        report.truth_mean,
        report.truth_median,
        "-",
        "-"
    );
    for m in &report.models {
        let _ = writeln!(
            s,
            "{:<28} {:>6} {:>10.4} {:>10.4} {:>14.1} {:>10.4}{}",
            m.name,
            m.probs.len(),
            m.mean,
            m.median,
            m.u,
            m.p,
            if m.rejected { " *" } else { "" }
        );
    }
    s
}

/// `model,k,pairs,min_dtw_s,min_dtw_v,min_ade,min_fde` for plotting metric
/// against `k`.
pub fn write_k_curve_csv<W: Write>(report: &EvalReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "model",
        "k",
        "pairs",
        "min_dtw_s",
        "min_dtw_v",
        "min_ade",
        "min_fde",
    ])?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for m in &report.models {
        for o in &m.open_loop {
            w.write_record([
                m.name.clone(),
                o.k.to_string(),
                o.pairs.to_string(),
                opt(o.min_dtw_s),
                opt(o.min_dtw_v),
                opt(o.min_ade),
                opt(o.min_fde),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajdata::CfState;

    fn r(crashed: bool) -> Rollout {
        Rollout {
            states: vec![CfState::default(); 2],
            positions: vec![0.0; 2],
            speeds: vec![0.0; 2],
            accels: vec![0.0],
            crashed: crashed.then_some(1),
        }
    }

    fn model(stochastic: bool, per_pair: Vec<Vec<bool>>) -> ModelRollouts {
        ModelRollouts {
            name: String::new(),
            stochastic,
            per_pair: per_pair
                .into_iter()
                .map(|v| v.into_iter().map(r).collect())
                .collect(),
        }
    }

    #[test]
    fn filter_rules() {
        let det = model(false, vec![vec![false], vec![true], vec![false]]);
        let stoch = model(
            true,
            vec![vec![true, false, true], vec![false; 3], vec![true; 3]],
        );
        // Pair 1: deterministic crash. Pair 2: every stochastic rollout crashed.
        assert_eq!(fair_filter(&[det.clone(), stoch.clone()], 3), vec![0]);
        // With k = 1 the first stochastic rollout of pair 0 crashed.
        assert_eq!(fair_filter(&[det, stoch], 1), Vec::<usize>::new());
        let clean = model(false, vec![vec![false]; 4]);
        assert_eq!(fair_filter(&[clean], 1), vec![0, 1, 2, 3]);
    }
}
