//! Ring-road experiments: collision statistics, trajectories and space–time plots.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use mccf_core::baselines::{BaselineConfig, BaselineKind, IdmParams};
use mccf_core::ringsim::{
    builtin_scenario, run_experiment, space_time_svg, write_trajectory_csv, RingConfig,
};
use serde::{Deserialize, Serialize};

use crate::config::{start_run, write_bytes, write_json, ModelCache, ModelSpec, Overrides};
use crate::error::{invalid, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Built-in scenario name; mutually exclusive with `ring`.
    pub scenario: Option<String>,
    /// Full ring configuration.
    pub ring: Option<RingConfig>,
    /// Overrides the scenario's trial count.
    pub trials: Option<usize>,
    pub model: ModelSpec,
    /// Trials written to the trajectory CSV; all when unset.
    pub trajectory_trials: Option<usize>,
    /// Trials rendered as SVG space–time diagrams.
    pub svg_trials: usize,
    pub out: PathBuf,
}

fn default_idm() -> ModelSpec {
    let p = IdmParams::default();
    ModelSpec::Inline(BaselineConfig {
        model: BaselineKind::Idm,
        params: [
            ("v0", p.v0),
            ("t_headway", p.t_headway),
            ("a_max", p.a_max),
            ("b", p.b),
            ("s0", p.s0),
            ("delta", p.delta),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect(),
    })
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            ring: None,
            trials: None,
            model: default_idm(),
            trajectory_trials: None,
            svg_trials: 1,
            out: PathBuf::from("runs/simulate"),
        }
    }
}

pub fn run(mut cfg: SimulateConfig, ov: &Overrides) -> Result<()> {
    if let Some(out) = &ov.out {
        cfg.out = out.clone();
    }
    let mut ring = match (&cfg.scenario, &cfg.ring) {
        (Some(_), Some(_)) => return Err(invalid("set either `scenario` or `ring`, not both")),
        (Some(name), None) => builtin_scenario(name)?,
        (None, Some(r)) => r.clone(),
        (None, None) => builtin_scenario("normal-equilibrium")?,
    };
    if let Some(t) = cfg.trials {
        ring.trials = t;
    }
    if let Some(seed) = ov.seed {
        ring.seed = seed;
    }
    ring.validate()?;
    let title = cfg.scenario.clone().unwrap_or_else(|| "custom ring".into());
    // The resolved copy pins every ring parameter so the run can be replayed.
    let resolved = SimulateConfig {
        scenario: None,
        ring: Some(ring.clone()),
        trials: None,
        ..cfg.clone()
    };
    start_run(&cfg.out, &resolved)?;

    let model = ModelCache::default().build(&cfg.model, ring.seed)?;
    let result = run_experiment(&ring, model.as_ref())?;
    write_json(&cfg.out.join("stats.json"), &result)?;

    if ring.record_every > 0 {
        let n = cfg
            .trajectory_trials
            .unwrap_or(result.trials.len())
            .min(result.trials.len());
        let path = cfg.out.join("trajectories.csv");
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write_trajectory_csv(&result.trials[..n], BufWriter::new(file))?;
        for t in result.trials.iter().take(cfg.svg_trials) {
            let svg = space_time_svg(
                &t.trajectory,
                ring.length,
                ring.horizon,
                &format!("{title}: {} (trial {})", result.model, t.trial),
            );
            write_bytes(
                &cfg.out.join(format!("spacetime_trial{}.svg", t.trial)),
                svg.as_bytes(),
            )?;
        }
    }
    println!(
        "{}: {:.2} ± {:.2} collisions per trial over {} trials",
        result.model,
        result.mean_collisions,
        result.std_collisions,
        result.trials.len()
    );
    Ok(())
}
