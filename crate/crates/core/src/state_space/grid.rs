//! Freedman–Diaconis discretisation of the `(Δv, d, v)` state space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;
use crate::trajdata::{CfState, Dataset};

/// Number of state dimensions.
pub const DIMS: usize = 3;

/// Bins used for a dimension whose interquartile range is zero.
pub const FALLBACK_BINS: usize = 32;

/// Per-dimension `(min, max)` in `(Δv, d, v)` order.
pub type Ranges = [(f64, f64); DIMS];

/// Urban ranges: Δv ∈ [−10, 10] m/s, d ∈ [0, 45] m, v ∈ [0, 20] m/s.
pub const URBAN_RANGES: Ranges = [(-10.0, 10.0), (0.0, 45.0), (0.0, 20.0)];

/// Freeway-extended ranges: Δv ∈ [−30, 30] m/s, d ∈ [0, 150] m, v ∈ [0, 40] m/s.
pub const EXTENDED_RANGES: Ranges = [(-30.0, 30.0), (0.0, 150.0), (0.0, 40.0)];

/// Coordinates of a state in `(Δv, d, v)` order.
pub fn coords(s: &CfState) -> [f64; DIMS] {
    [s.dv, s.d, s.v]
}

pub fn from_coords(c: [f64; DIMS]) -> CfState {
    CfState {
        dv: c[0],
        d: c[1],
        v: c[2],
    }
}

/// Freedman–Diaconis width `h = 2·IQR / n^(1/3)` with type-7 quartiles.
pub fn fd_bin_width(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::Degenerate("need at least two samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = stats::iqr_sorted(&sorted);
    if !(iqr > 0.0) {
        return Err(Error::Degenerate("interquartile range is zero".into()));
    }
    Ok(2.0 * iqr / (sorted.len() as f64).cbrt())
}

/// `k = ⌈(max − min) / h⌉`, at least one bin.
///
/// Quotients within 1e-12 (relative) of an integer are treated as exact so
/// that e.g. `20 / 0.4` gives 50 rather than 51.
pub fn fd_num_bins(range: (f64, f64), h: f64) -> usize {
    let r = (range.1 - range.0) / h;
    let k = (r - r.abs() * 1e-12).ceil();
    (k as usize).max(1)
}

/// Bin index triple in `(Δv, d, v)` order.
pub type BinIndex = [u32; DIMS];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateGrid {
    pub ranges: Ranges,
    pub bin_counts: [usize; DIMS],
    pub bin_widths: [f64; DIMS],
}

/// Side information produced while building a grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridReport {
    /// Dimensions whose IQR was zero and fell back to [`FALLBACK_BINS`].
    pub degenerate_dims: Vec<usize>,
    /// Training samples outside the configured ranges (clamped at discretisation).
    pub out_of_range: usize,
}

impl StateGrid {
    /// Grid with explicit widths.
    pub fn with_widths(ranges: Ranges, bin_widths: [f64; DIMS]) -> Self {
        let bin_counts = std::array::from_fn(|i| fd_num_bins(ranges[i], bin_widths[i]));
        Self {
            ranges,
            bin_counts,
            bin_widths,
        }
    }

    pub fn total_bins(&self) -> u128 {
        self.bin_counts.iter().map(|&k| k as u128).product()
    }

    /// `floor((x − min) / h)` per dimension, clamped to `[0, k − 1]`.
    /// Bins are half-open `[lo, hi)`; the top bin also takes everything above.
    pub fn discretize(&self, s: &CfState) -> BinIndex {
        let c = coords(s);
        std::array::from_fn(|i| {
            let raw = ((c[i] - self.ranges[i].0) / self.bin_widths[i]).floor();
            let top = (self.bin_counts[i] - 1) as f64;
            // NaN.clamp is NaN, which casts to 0.
            raw.clamp(0.0, top) as u32
        })
    }

    pub fn flatten(&self, b: BinIndex) -> u64 {
        let [_, kd, kv] = self.bin_counts;
        (b[0] as u64 * kd as u64 + b[1] as u64) * kv as u64 + b[2] as u64
    }

    pub fn unflatten(&self, flat: u64) -> BinIndex {
        let [_, kd, kv] = self.bin_counts;
        let v = flat % kv as u64;
        let rest = flat / kv as u64;
        [
            (rest / kd as u64) as u32,
            (rest % kd as u64) as u32,
            v as u32,
        ]
    }

    pub fn bin_of(&self, s: &CfState) -> u64 {
        self.flatten(self.discretize(s))
    }

    /// Range-normalised coordinates `(x − min) / (max − min)`.
    pub fn normalize(&self, s: &CfState) -> [f64; DIMS] {
        self.normalize_coords(coords(s))
    }

    pub fn normalize_coords(&self, c: [f64; DIMS]) -> [f64; DIMS] {
        std::array::from_fn(|i| {
            let (lo, hi) = self.ranges[i];
            (c[i] - lo) / (hi - lo)
        })
    }

    /// Clamps a state into the grid ranges.
    pub fn clamp(&self, s: &CfState) -> CfState {
        let c = coords(s);
        from_coords(std::array::from_fn(|i| {
            c[i].clamp(self.ranges[i].0, self.ranges[i].1)
        }))
    }

    pub fn contains(&self, s: &CfState) -> bool {
        let c = coords(s);
        (0..DIMS).all(|i| c[i] >= self.ranges[i].0 && c[i] <= self.ranges[i].1)
    }
}

pub fn validate_ranges(ranges: &Ranges) -> Result<()> {
    for (i, &(lo, hi)) in ranges.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::Validation(format!(
                "invalid range {i}: ({lo}, {hi})"
            )));
        }
    }
    Ok(())
}

/// Builds the grid from the pooled training states of every pair.
///
/// Each dimension gets its own Freedman–Diaconis width; a dimension with zero
/// IQR falls back to [`FALLBACK_BINS`] uniform bins.
pub fn build_grid(train: &Dataset, ranges: Ranges) -> Result<(StateGrid, GridReport)> {
    validate_ranges(&ranges)?;
    let mut columns: [Vec<f64>; DIMS] = Default::default();
    for pair in &train.pairs {
        for s in pair.states() {
            let c = coords(&s);
            for i in 0..DIMS {
                columns[i].push(c[i]);
            }
        }
    }
    if columns[0]
        .iter()
        .chain(&columns[1])
        .chain(&columns[2])
        .any(|x| !x.is_finite())
    {
        return Err(Error::Training("non-finite training state".into()));
    }
    grid_from_columns(&columns, ranges)
}

pub(crate) fn grid_from_columns(
    columns: &[Vec<f64>; DIMS],
    ranges: Ranges,
) -> Result<(StateGrid, GridReport)> {
    let mut report = GridReport::default();
    let mut widths = [0.0; DIMS];
    for i in 0..DIMS {
        let span = ranges[i].1 - ranges[i].0;
        widths[i] = match fd_bin_width(&columns[i]) {
            Ok(h) => h,
            Err(Error::Degenerate(_)) => {
                report.degenerate_dims.push(i);
                span / FALLBACK_BINS as f64
            }
            Err(e) => return Err(e),
        };
    }
    let n = columns[0].len();
    report.out_of_range = (0..n)
        .filter(|&j| (0..DIMS).any(|i| columns[i][j] < ranges[i].0 || columns[i][j] > ranges[i].1))
        .count();
    Ok((StateGrid::with_widths(ranges, widths), report))
}
