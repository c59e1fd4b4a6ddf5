//! JSON persistence for trained models (schema `mccf-model/1`).
//!
//! Floats are written in shortest round-trip form, so every value reloads
//! bit-exactly and a save → load → save cycle reproduces the same bytes.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cluster::{Cluster, ClusterModel, ModelMeta};
use super::grid::{Ranges, StateGrid, DIMS};
use super::transitions::TransitionMatrix;
use crate::error::{Error, Result};

pub const MODEL_SCHEMA: &str = "mccf-model/1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    ranges: Ranges,
    widths: [f64; DIMS],
    counts: [usize; DIMS],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema: String,
    grid: GridFile,
    clusters: Vec<Cluster>,
    /// `[flattened bin index, cluster id]`, ascending by bin.
    bin_to_cluster: Vec<(u64, u32)>,
    transitions: TransitionMatrix,
    meta: ModelMeta,
}

pub fn to_json_bytes(model: &ClusterModel) -> Result<Vec<u8>> {
    let mut bins: Vec<(u64, u32)> = model
        .bin_to_cluster()
        .iter()
        .map(|(&b, &c)| (b, c))
        .collect();
    bins.sort_unstable();
    let file = ModelFile {
        schema: MODEL_SCHEMA.to_string(),
        grid: GridFile {
            ranges: model.grid.ranges,
            widths: model.grid.bin_widths,
            counts: model.grid.bin_counts,
        },
        clusters: model.clusters.clone(),
        bin_to_cluster: bins,
        transitions: model.transitions.clone(),
        meta: model.meta.clone(),
    };
    let mut out = serde_json::to_vec(&file)?;
    out.push(b'\n');
    Ok(out)
}

pub fn from_json_bytes(bytes: &[u8]) -> Result<ClusterModel> {
    #[derive(Deserialize)]
    struct Header {
        schema: Option<String>,
    }
    let header: Header = serde_json::from_slice(bytes)
        .map_err(|e| Error::Schema(format!("not a model file: {e}")))?;
    match header.schema.as_deref() {
        Some(MODEL_SCHEMA) => {}
        Some(other) => {
            return Err(Error::Schema(format!(
                "unsupported schema `{other}`, expected `{MODEL_SCHEMA}`"
            )))
        }
        None => return Err(Error::Schema("missing `schema` field".into())),
    }
    let file: ModelFile = serde_json::from_slice(bytes)
        .map_err(|e| Error::Schema(format!("invalid model file: {e}")))?;

    let grid = StateGrid {
        ranges: file.grid.ranges,
        bin_counts: file.grid.counts,
        bin_widths: file.grid.widths,
    };
    for i in 0..DIMS {
        let (lo, hi) = grid.ranges[i];
        if !(hi > lo) || !(grid.bin_widths[i] > 0.0) || grid.bin_counts[i] == 0 {
            return Err(Error::Schema(format!("invalid grid dimension {i}")));
        }
    }
    let total = grid.total_bins();
    let mut map = HashMap::with_capacity(file.bin_to_cluster.len());
    for (bin, id) in file.bin_to_cluster {
        if bin as u128 >= total {
            return Err(Error::Schema(format!("bin {bin} outside the grid")));
        }
        if map.insert(bin, id).is_some() {
            return Err(Error::Schema(format!("bin {bin} mapped twice")));
        }
    }
    let counts_consistent = file.transitions.rows.len() == file.transitions.counts.len()
        && file
            .transitions
            .rows
            .iter()
            .zip(&file.transitions.counts)
            .all(|((a, ra), (b, rb))| a == b && ra.len() == rb.len());
    if !counts_consistent {
        return Err(Error::Schema("transition rows and counts disagree".into()));
    }
    ClusterModel::from_parts(grid, file.clusters, map, file.transitions, file.meta)
}

pub fn save_model(model: &ClusterModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json_bytes(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ClusterModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_json_bytes(&bytes)
}
