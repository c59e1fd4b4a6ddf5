//! One-step, open-loop and transition-probability evaluation on a test split.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use mccf_core::metrics::{
    evaluate, evaluate_probabilities, format_eval_table, format_prob_table, write_k_curve_csv,
    EvalConfig,
};
use mccf_core::trajdata::ColumnMap;
use mccf_core::CarFollowing;
use serde::{Deserialize, Serialize};

use crate::config::{
    required, start_run, write_bytes, write_json, ModelCache, ModelSpec, Overrides,
};
use crate::error::{invalid, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub test: Option<PathBuf>,
    pub columns: ColumnMap,
    pub models: Vec<ModelSpec>,
    pub k_values: Vec<usize>,
    pub seed: u64,
    /// MC-CF model whose transitions score trajectories; defaults to the
    /// first MC-CF entry in `models`.
    pub probability_model: Option<PathBuf>,
    pub probabilities: bool,
    pub out: PathBuf,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            test: None,
            columns: ColumnMap::default(),
            models: Vec::new(),
            k_values: EvalConfig::default().k_values,
            seed: 0,
            probability_model: None,
            probabilities: true,
            out: PathBuf::from("runs/evaluate"),
        }
    }
}

pub fn run(mut cfg: EvaluateConfig, ov: &Overrides) -> Result<()> {
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &ov.out {
        cfg.out = out.clone();
    }
    let path = required(&cfg.test, "test")?.to_path_buf();
    if cfg.models.is_empty() {
        return Err(invalid("config field `models` is empty"));
    }
    let mut cache = ModelCache::default();
    let models: Vec<Box<dyn CarFollowing>> = cfg
        .models
        .iter()
        .map(|m| cache.build(m, cfg.seed))
        .collect::<Result<_>>()?;
    let mut names: Vec<&str> = models.iter().map(|m| m.name()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(invalid(format!(
            "two models are named `{}`; set `name` on one of them",
            w[0]
        )));
    }
    let prob_path = cfg.probability_model.clone().or_else(|| {
        cfg.models.iter().find_map(|m| match m {
            ModelSpec::Mccf { path, .. } => Some(path.clone()),
            _ => None,
        })
    });
    if cfg.probabilities && prob_path.is_none() {
        return Err(invalid(
            "transition probabilities need an MC-CF model: set `probability_model` or `probabilities: false`",
        ));
    }
    let eval_cfg = EvalConfig {
        k_values: cfg.k_values.clone(),
        seed: cfg.seed,
    };
    start_run(&cfg.out, &cfg)?;

    let test = super::read_dataset(&path, &cfg.columns)?;
    let refs: Vec<&dyn CarFollowing> = models.iter().map(|m| m.as_ref()).collect();
    let report = evaluate(&refs, &test, &eval_cfg)?;
    write_json(&cfg.out.join("eval.json"), &report)?;
    let csv_path = cfg.out.join("k_curve.csv");
    let file = File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    write_k_curve_csv(&report, BufWriter::new(file))?;
    let mut text = format_eval_table(&report);

    if cfg.probabilities {
        let prob_model = cache.cluster_model(prob_path.as_deref().expect("checked above"))?;
        let probs = evaluate_probabilities(&prob_model, &test, &refs, cfg.seed)?;
        write_json(&cfg.out.join("probabilities.json"), &probs)?;
        text.push('\n');
        text.push_str(&format_prob_table(&probs));
    }
    write_bytes(&cfg.out.join("eval.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}
