//! Parse, preprocess and split raw trajectory files.

use std::fmt::Write as _;
use std::path::PathBuf;

use mccf_core::trajdata::{
    preprocess_pairs, split_train_test, write_trajectory_csv, ColumnMap, Dataset, DurationSummary,
    PreprocessConfig,
};
use serde::{Deserialize, Serialize};

use crate::config::{start_run, write_bytes, write_json, Overrides};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Trajectory CSV files, merged before preprocessing.
    pub inputs: Vec<PathBuf>,
    pub columns: ColumnMap,
    pub preprocess: PreprocessConfig,
    pub test_fraction: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            columns: ColumnMap::default(),
            preprocess: PreprocessConfig::default(),
            test_fraction: 0.2,
            seed: 0,
            out: PathBuf::from("runs/ingest"),
        }
    }
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    raw: DurationSummary,
    eligible: DurationSummary,
    train: DurationSummary,
    test: DurationSummary,
}

fn table(s: &IngestSummary) -> String {
    let mut t = String::new();
    let _ = writeln!(
        t,
        "{:<10} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "Split", "CF Pairs", "Mean (s)", "Std (s)", "Max (s)", "Min (s)"
    );
    for (name, d) in [
        ("raw", &s.raw),
        ("eligible", &s.eligible),
        ("train", &s.train),
        ("test", &s.test),
    ] {
        let _ = writeln!(
            t,
            "{name:<10} {:>9} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
            d.pairs, d.mean, d.std, d.max, d.min
        );
    }
    t
}

pub fn run(mut cfg: IngestConfig, ov: &Overrides) -> Result<()> {
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &ov.out {
        cfg.out = out.clone();
    }
    if cfg.inputs.is_empty() {
        return Err(invalid(
            "config field `inputs` must list at least one CSV file",
        ));
    }
    start_run(&cfg.out, &cfg)?;

    let raw = super::read_datasets(&cfg.inputs, &cfg.columns)?;
    let eligible = preprocess_pairs(&raw, &cfg.preprocess);
    if eligible.is_empty() {
        let summary = IngestSummary {
            raw: DurationSummary::of(&raw),
            eligible: DurationSummary::of(&eligible),
            train: DurationSummary::of(&Dataset::default()),
            test: DurationSummary::of(&Dataset::default()),
        };
        write_json(&cfg.out.join("summary.json"), &summary)?;
        return Err(invalid(format!(
            "no eligible pairs: {} pairs read, none passed preprocessing",
            raw.len()
        )));
    }
    let (train, test) = split_train_test(&eligible, cfg.test_fraction, cfg.seed)?;
    write_trajectory_csv(&train, cfg.out.join("train.csv"))?;
    write_trajectory_csv(&test, cfg.out.join("test.csv"))?;

    let summary = IngestSummary {
        raw: DurationSummary::of(&raw),
        eligible: DurationSummary::of(&eligible),
        train: DurationSummary::of(&train),
        test: DurationSummary::of(&test),
    };
    write_json(&cfg.out.join("summary.json"), &summary)?;
    let text = table(&summary);
    write_bytes(&cfg.out.join("summary.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}
