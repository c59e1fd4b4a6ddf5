pub mod calibrate;
pub mod evaluate;
pub mod ingest;
pub mod simulate;
pub mod train;

use std::path::Path;

use mccf_core::trajdata::{parse_trajectory_csv, ColumnMap, Dataset};

use crate::error::{invalid, Result};

/// Reads one or more trajectory CSV files into a single dataset.
pub fn read_datasets(paths: &[impl AsRef<Path>], columns: &ColumnMap) -> Result<Dataset> {
    let mut pairs = Vec::new();
    for p in paths {
        pairs.extend(parse_trajectory_csv(p, columns)?.pairs);
    }
    let ds = Dataset::new(pairs, Default::default());
    ds.validate_unique_ids()?;
    Ok(ds)
}

pub fn read_dataset(path: &Path, columns: &ColumnMap) -> Result<Dataset> {
    let ds = read_datasets(&[path], columns)?;
    if ds.is_empty() {
        return Err(invalid(format!("{}: no trajectory pairs", path.display())));
    }
    Ok(ds)
}
