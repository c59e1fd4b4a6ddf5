//! Fit baseline models to a training split by differential evolution.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use mccf_core::baselines::BaselineKind;
use mccf_core::calibrate::{calibrate_model, DeConfig};
use mccf_core::trajdata::ColumnMap;
use serde::{Deserialize, Serialize};

use crate::config::{required, start_run, write_bytes, write_json, Overrides};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateConfig {
    pub train: Option<PathBuf>,
    pub columns: ColumnMap,
    pub models: Vec<BaselineKind>,
    pub de: DeConfig,
    pub out: PathBuf,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self {
            train: None,
            columns: ColumnMap::default(),
            models: BaselineKind::ALL.to_vec(),
            de: DeConfig::default(),
            out: PathBuf::from("runs/calibrate"),
        }
    }
}

pub fn run(mut cfg: CalibrateConfig, ov: &Overrides) -> Result<()> {
    if let Some(seed) = ov.seed {
        cfg.de.seed = seed;
    }
    if let Some(out) = &ov.out {
        cfg.out = out.clone();
    }
    let path = required(&cfg.train, "train")?.to_path_buf();
    if cfg.models.is_empty() {
        return Err(invalid("config field `models` is empty"));
    }
    cfg.de.validate()?;
    start_run(&cfg.out, &cfg)?;

    let train = super::read_dataset(&path, &cfg.columns)?;
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "{:<14} {:>10} {:>6} {:>10}  params",
        "Model", "RMSE(v)", "gens", "converged"
    );
    for &kind in &cfg.models {
        let start = Instant::now();
        let report = calibrate_model(kind, &train, &cfg.de)?;
        eprintln!("calibrated {kind} in {:.1}s", start.elapsed().as_secs_f64());
        write_json(&cfg.out.join(format!("{}.json", kind.id())), &report)?;
        let params: Vec<String> = report
            .best_params
            .iter()
            .map(|(k, v)| format!("{k}={v:.4}"))
            .collect();
        let _ = writeln!(
            summary,
            "{:<14} {:>10.4} {:>6} {:>10}  {}",
            kind.label(),
            report.best_cost,
            report.generations,
            report.converged,
            params.join(" ")
        );
    }
    write_bytes(&cfg.out.join("summary.txt"), summary.as_bytes())?;
    print!("{summary}");
    Ok(())
}
