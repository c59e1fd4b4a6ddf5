use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeConfig {
    /// Population multiplier: the population holds `max(5, pop_size · dim)` members.
    pub pop_size: usize,
    /// Range of the per-generation mutation factor `F`.
    pub mutation: (f64, f64),
    pub recombination: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            pop_size: 15,
            mutation: (0.5, 1.0),
            recombination: 0.7,
            max_iter: 50,
            tol: 0.01,
            seed: 0,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.mutation;
        if self.pop_size < 4 {
            return Err(Error::Validation("pop_size must be at least 4".into()));
        }
        if !(0.0..=1.0).contains(&self.recombination) {
            return Err(Error::Validation("recombination must lie in [0, 1]".into()));
        }
        if !(lo > 0.0 && hi < 2.0 && lo <= hi) {
            return Err(Error::Validation(
                "mutation range must lie within (0, 2)".into(),
            ));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Validation("tol must be non-negative".into()));
        }
        Ok(())
    }

    pub fn population(&self, dim: usize) -> usize {
        (self.pop_size * dim).max(5)
    }
}

pub fn validate_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::Validation("no parameters to optimise".into()));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Validation(format!(
                "bound {i}: need finite lo < hi, got ({lo}, {hi})"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeResult {
    pub best_x: Vec<f64>,
    pub best_cost: f64,
    /// Best cost after initialisation, then after each generation.
    pub history: Vec<f64>,
    pub generations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Snapshot handed to an observer after initialisation and each generation.
pub struct Generation<'a> {
    pub index: usize,
    pub population: &'a [Vec<f64>],
    pub costs: &'a [f64],
}

/// Minimises `objective` over the box `bounds` with best1bin differential
/// evolution. Trials for a generation are built from a snapshot of the
/// population and evaluated in parallel, so results do not depend on the
/// thread count.
pub fn differential_evolution<F>(
    objective: F,
    bounds: &[(f64, f64)],
    cfg: &DeConfig,
) -> Result<DeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    differential_evolution_observed(objective, bounds, cfg, |_| {})
}

pub fn differential_evolution_observed<F, O>(
    objective: F,
    bounds: &[(f64, f64)],
    cfg: &DeConfig,
    mut observe: O,
) -> Result<DeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
    O: FnMut(&Generation<'_>),
{
    cfg.validate()?;
    validate_bounds(bounds)?;
    let dim = bounds.len();
    let n = cfg.population(dim);
    let mut g = rng::stream(cfg.seed, 0xde, 0);

    let scale = |u: &[f64]| -> Vec<f64> {
        u.iter()
            .zip(bounds)
            .map(|(u, &(lo, hi))| lo + u * (hi - lo))
            .collect()
    };
    let evaluate = |units: &[Vec<f64>]| -> Vec<f64> {
        units
            .par_iter()
            .map(|u| {
                let c = objective(&scale(u));
                if c.is_finite() {
                    c
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    };

    // Latin hypercube: one sample per stratum in every dimension.
    let mut unit = vec![vec![0.0; dim]; n];
    for j in 0..dim {
        let mut col: Vec<f64> = (0..n)
            .map(|i| (i as f64 + g.random::<f64>()) / n as f64)
            .collect();
        col.shuffle(&mut g);
        for (row, v) in unit.iter_mut().zip(col) {
            row[j] = v;
        }
    }
    let mut costs = evaluate(&unit);
    let mut evaluations = n;
    if costs.iter().all(|c| c.is_infinite()) {
        return Err(Error::Calibration(
            "objective is non-finite over the whole initial population".into(),
        ));
    }
    let mut best = argmin(&costs);
    let mut history = vec![costs[best]];
    observe(&Generation {
        index: 0,
        population: &unit.iter().map(|u| scale(u)).collect::<Vec<_>>(),
        costs: &costs,
    });

    let mut converged = converged_at(&costs, cfg.tol);
    let mut generations = 0;
    while !converged && generations < cfg.max_iter {
        generations += 1;
        let f = g.random_range(cfg.mutation.0..=cfg.mutation.1);
        let trials: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let (r1, r2) = pick_two(&mut g, n, i);
                let forced = g.random_range(0..dim);
                let mut trial = unit[i].clone();
                for k in 0..dim {
                    let cross = g.random::<f64>() < cfg.recombination;
                    if cross || k == forced {
                        trial[k] = unit[best][k] + f * (unit[r1][k] - unit[r2][k]);
                    }
                }
                for v in &mut trial {
                    if !(0.0..=1.0).contains(v) {
                        *v = g.random::<f64>();
                    }
                }
                trial
            })
            .collect();
        let trial_costs = evaluate(&trials);
        evaluations += n;
        for (i, (trial, c)) in trials.into_iter().zip(trial_costs).enumerate() {
            if c <= costs[i] {
                unit[i] = trial;
                costs[i] = c;
            }
        }
        best = argmin(&costs);
        history.push(costs[best]);
        observe(&Generation {
            index: generations,
            population: &unit.iter().map(|u| scale(u)).collect::<Vec<_>>(),
            costs: &costs,
        });
        converged = converged_at(&costs, cfg.tol);
    }

    Ok(DeResult {
        best_x: scale(&unit[best]),
        best_cost: costs[best],
        history,
        generations,
        evaluations,
        converged,
    })
}

fn argmin(costs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &c) in costs.iter().enumerate() {
        if c < costs[best] {
            best = i;
        }
    }
    best
}

/// Two distinct members, both different from `exclude`.
fn pick_two(g: &mut impl Rng, n: usize, exclude: usize) -> (usize, usize) {
    let draw = |g: &mut dyn rand::RngCore, avoid: &[usize]| loop {
        let r = g.random_range(0..n);
        if !avoid.contains(&r) {
            break r;
        }
    };
    let r1 = draw(g, &[exclude]);
    let r2 = draw(g, &[exclude, r1]);
    (r1, r2)
}

/// Population cost spread small relative to its mean.
fn converged_at(costs: &[f64], tol: f64) -> bool {
    if costs.iter().any(|c| !c.is_finite()) {
        return false;
    }
    let n = costs.len() as f64;
    let mean = costs.iter().sum::<f64>() / n;
    let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() <= tol * mean.abs()
}
