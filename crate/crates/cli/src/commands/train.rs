//! Build the grid, clusters and transition matrix from a training split.

use std::fmt::Write as _;
use std::path::PathBuf;

use mccf_core::mccf::{augment_solo, save_model};
use mccf_core::state_space::{train_model, DEFAULT_N_MIN};
use mccf_core::trajdata::ColumnMap;
use serde::{Deserialize, Serialize};

use crate::config::{required, start_run, write_bytes, write_json, Overrides, RangeSpec};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub train: Option<PathBuf>,
    pub columns: ColumnMap,
    pub ranges: RangeSpec,
    pub n_min: usize,
    /// Replace missing or distant leaders with a ghost leader.
    pub augment_solo: bool,
    /// Ghost leader spacing (m); defaults to the upper end of the spacing range.
    pub ghost_spacing: Option<f64>,
    /// Recorded for provenance; training is deterministic.
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            train: None,
            columns: ColumnMap::default(),
            ranges: RangeSpec::default(),
            n_min: DEFAULT_N_MIN,
            augment_solo: false,
            ghost_spacing: None,
            seed: 0,
            out: PathBuf::from("runs/train"),
        }
    }
}

#[derive(Debug, Serialize)]
struct DimReport {
    name: &'static str,
    range: (f64, f64),
    bin_width: f64,
    bins: usize,
}

#[derive(Debug, Serialize)]
struct TrainReport {
    dataset_hash: String,
    pairs: usize,
    states: usize,
    out_of_range_states: usize,
    dimensions: Vec<DimReport>,
    degenerate_dimensions: Vec<&'static str>,
    total_bins: u128,
    occupied_bins: usize,
    clusters: usize,
    compression_ratio: f64,
    merge_rounds: usize,
    transitions: u64,
}

const DIM_NAMES: [&str; 3] = ["dv", "d", "v"];

fn table(r: &TrainReport) -> String {
    let mut t = String::new();
    let _ = writeln!(
        t,
        "{:<6} {:>18} {:>10} {:>8}",
        "Dim", "Range", "Width", "Bins"
    );
    for d in &r.dimensions {
        let range = format!("[{}, {}]", d.range.0, d.range.1);
        let _ = writeln!(
            t,
            "{:<6} {:>18} {:>10.4} {:>8}",
            d.name, range, d.bin_width, d.bins
        );
    }
    let _ = writeln!(t, "total bins        {}", r.total_bins);
    let _ = writeln!(t, "occupied bins     {}", r.occupied_bins);
    let _ = writeln!(t, "clusters          {}", r.clusters);
    let _ = writeln!(t, "compression ratio {:.2}", r.compression_ratio);
    let _ = writeln!(t, "pairs / states    {} / {}", r.pairs, r.states);
    t
}

pub fn run(mut cfg: TrainConfig, ov: &Overrides) -> Result<()> {
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &ov.out {
        cfg.out = out.clone();
    }
    let path = required(&cfg.train, "train")?.to_path_buf();
    let ranges = cfg.ranges.resolve()?;
    start_run(&cfg.out, &cfg)?;

    let mut ds = super::read_dataset(&path, &cfg.columns)?;
    if cfg.augment_solo {
        ds = augment_solo(&ds, cfg.ghost_spacing.unwrap_or(ranges[1].1));
    }
    let (model, grid_report) = train_model(&ds, ranges, cfg.n_min)?;
    save_model(&model, cfg.out.join("model.json"))?;

    let g = &model.grid;
    let report = TrainReport {
        dataset_hash: model.meta.dataset_hash.clone(),
        pairs: model.meta.n_pairs,
        states: model.meta.n_states,
        out_of_range_states: model.meta.out_of_range_samples,
        dimensions: (0..3)
            .map(|i| DimReport {
                name: DIM_NAMES[i],
                range: g.ranges[i],
                bin_width: g.bin_widths[i],
                bins: g.bin_counts[i],
            })
            .collect(),
        degenerate_dimensions: grid_report
            .degenerate_dims
            .iter()
            .map(|&i| DIM_NAMES[i])
            .collect(),
        total_bins: g.total_bins(),
        occupied_bins: model.meta.occupied_bins,
        clusters: model.clusters.len(),
        compression_ratio: model.compression_ratio(),
        merge_rounds: model.meta.merge_rounds,
        transitions: model.transitions.total_count(),
    };
    write_json(&cfg.out.join("training_report.json"), &report)?;
    let text = table(&report);
    write_bytes(&cfg.out.join("training_report.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}
