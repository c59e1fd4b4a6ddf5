//! Trajectory ingestion and preprocessing.
//!
//! Raw leader/follower series come in as CSV, get grouped into
//! [`TrajectoryPair`]s, and are cleaned by [`preprocess_pairs`] before being
//! split into train and test sets.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Sampling interval of every series handled by the toolkit (s).
pub const DT: f64 = 0.1;

/// Vehicle length used when the data carries no length columns (m).
pub const DEFAULT_VEHICLE_LENGTH: f64 = 5.0;

const TIME_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x_f: f64,
    pub v_f: f64,
    pub a_f: f64,
    pub x_l: f64,
    pub v_l: f64,
    pub a_l: f64,
}

/// Car-following state `(v, Δv, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CfState {
    /// Follower speed (m/s).
    pub v: f64,
    /// Follower speed minus leader speed (m/s); positive when closing in.
    pub dv: f64,
    /// Bumper-to-bumper spacing (m).
    pub d: f64,
}

impl CfState {
    pub fn new(v: f64, dv: f64, d: f64) -> Self {
        Self { v, dv, d }
    }

    /// Leader speed implied by the state.
    pub fn v_lead(&self) -> f64 {
        self.v - self.dv
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPair {
    pub pair_id: String,
    pub interaction_type: String,
    pub points: Vec<TrajectoryPoint>,
    /// Average of leader and follower vehicle lengths (m).
    pub length_avg: f64,
}

impl TrajectoryPair {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Elapsed time between the first and last sample (s).
    pub fn duration(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn state_at(&self, i: usize) -> CfState {
        let p = &self.points[i];
        CfState {
            v: p.v_f,
            dv: p.v_f - p.v_l,
            d: p.x_l - p.x_f - self.length_avg,
        }
    }

    pub fn states(&self) -> Vec<CfState> {
        derive_states(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    #[default]
    Unsplit,
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub pairs: Vec<TrajectoryPair>,
    pub split_tag: SplitTag,
}

impl Dataset {
    pub fn new(pairs: Vec<TrajectoryPair>, split_tag: SplitTag) -> Self {
        Self { pairs, split_tag }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn num_points(&self) -> usize {
        self.pairs.iter().map(TrajectoryPair::len).sum()
    }

    pub fn validate_unique_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for p in &self.pairs {
            if !seen.insert(p.pair_id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate pair_id `{}`",
                    p.pair_id
                )));
            }
        }
        Ok(())
    }
}

/// Maps logical trajectory fields onto CSV header names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub pair_id: String,
    pub t: String,
    pub x_f: String,
    pub v_f: String,
    pub x_l: String,
    pub v_l: String,
    pub a_f: String,
    pub a_l: String,
    pub length_f: String,
    pub length_l: String,
    pub interaction_type: String,
    /// Accept files without leader columns (solo/free-flow driving).
    /// Missing leader values are stored as NaN.
    pub allow_missing_leader: bool,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            pair_id: "pair_id".into(),
            t: "t".into(),
            x_f: "x_f".into(),
            v_f: "v_f".into(),
            x_l: "x_l".into(),
            v_l: "v_l".into(),
            a_f: "a_f".into(),
            a_l: "a_l".into(),
            length_f: "length_f".into(),
            length_l: "length_l".into(),
            interaction_type: "interaction_type".into(),
            allow_missing_leader: false,
        }
    }
}

struct ColumnIndex {
    pair_id: usize,
    t: usize,
    x_f: usize,
    v_f: usize,
    x_l: Option<usize>,
    v_l: Option<usize>,
    a_f: Option<usize>,
    a_l: Option<usize>,
    length_f: Option<usize>,
    length_l: Option<usize>,
    interaction_type: Option<usize>,
}

struct RawRow {
    line: u64,
    t: f64,
    x_f: f64,
    v_f: f64,
    x_l: f64,
    v_l: f64,
    a_f: Option<f64>,
    a_l: Option<f64>,
    length: Option<f64>,
    interaction_type: Option<String>,
}

/// Reads a trajectory CSV file into an unsplit [`Dataset`].
pub fn parse_trajectory_csv(path: impl AsRef<Path>, schema: &ColumnMap) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory_reader(file, path, schema)
}

/// Same as [`parse_trajectory_csv`] over any reader; `source` is used in error messages.
pub fn parse_trajectory_reader<R: Read>(
    reader: R,
    source: impl AsRef<Path>,
    schema: &ColumnMap,
) -> Result<Dataset> {
    let source = source.as_ref();
    let parse_err = |line: u64, message: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| {
        find(name).ok_or_else(|| parse_err(1, format!("missing required column `{name}`")))
    };

    let leader = |name: &str| -> Result<Option<usize>> {
        match find(name) {
            Some(i) => Ok(Some(i)),
            None if schema.allow_missing_leader => Ok(None),
            None => Err(parse_err(1, format!("missing required column `{name}`"))),
        }
    };

    let idx = ColumnIndex {
        pair_id: require(&schema.pair_id)?,
        t: require(&schema.t)?,
        x_f: require(&schema.x_f)?,
        v_f: require(&schema.v_f)?,
        x_l: leader(&schema.x_l)?,
        v_l: leader(&schema.v_l)?,
        a_f: find(&schema.a_f),
        a_l: find(&schema.a_l),
        length_f: find(&schema.length_f),
        length_l: find(&schema.length_l),
        interaction_type: find(&schema.interaction_type),
    };

    let mut groups: BTreeMap<String, Vec<RawRow>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize, name: &str| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| {
                parse_err(
                    line,
                    format!("column `{name}`: cannot parse `{}`", field(i)),
                )
            })
        };
        let opt_num = |i: Option<usize>, name: &str| -> Result<Option<f64>> {
            match i {
                Some(i) if !field(i).is_empty() => num(i, name).map(Some),
                _ => Ok(None),
            }
        };

        let pair_id = field(idx.pair_id).to_string();
        if pair_id.is_empty() {
            return Err(parse_err(line, "empty pair_id".into()));
        }
        let length = match (
            opt_num(idx.length_f, &schema.length_f)?,
            opt_num(idx.length_l, &schema.length_l)?,
        ) {
            (Some(a), Some(b)) => Some(0.5 * (a + b)),
            (Some(a), None) | (None, Some(a)) => Some(a),
            (None, None) => None,
        };
        let row = RawRow {
            line,
            t: num(idx.t, &schema.t)?,
            x_f: num(idx.x_f, &schema.x_f)?,
            v_f: num(idx.v_f, &schema.v_f)?,
            x_l: opt_num(idx.x_l, &schema.x_l)?.unwrap_or(f64::NAN),
            v_l: opt_num(idx.v_l, &schema.v_l)?.unwrap_or(f64::NAN),
            a_f: opt_num(idx.a_f, &schema.a_f)?,
            a_l: opt_num(idx.a_l, &schema.a_l)?,
            length,
            interaction_type: idx
                .interaction_type
                .map(|i| field(i).to_string())
                .filter(|s| !s.is_empty()),
        };
        if !row.t.is_finite() || !row.x_f.is_finite() || !row.v_f.is_finite() {
            return Err(parse_err(line, "non-finite time, position or speed".into()));
        }
        if !groups.contains_key(&pair_id) {
            order.push(pair_id.clone());
        }
        groups.entry(pair_id).or_default().push(row);
    }

    let mut pairs = Vec::with_capacity(order.len());
    for pair_id in order {
        let mut rows = groups.remove(&pair_id).unwrap_or_default();
        let file_order_monotone = rows.windows(2).all(|w| w[1].t > w[0].t);
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
        for w in rows.windows(2) {
            if (w[1].t - w[0].t).abs() < TIME_EPS {
                return Err(Error::Validation(format!(
                    "{}: line {}: duplicate time {} in pair `{pair_id}`",
                    source.display(),
                    w[1].line,
                    w[1].t
                )));
            }
        }
        if !file_order_monotone {
            return Err(Error::Validation(format!(
                "{}: pair `{pair_id}`: time is not increasing in file order",
                source.display()
            )));
        }
        pairs.push(assemble_pair(pair_id, rows));
    }
    let ds = Dataset::new(pairs, SplitTag::Unsplit);
    ds.validate_unique_ids()?;
    Ok(ds)
}

fn assemble_pair(pair_id: String, rows: Vec<RawRow>) -> TrajectoryPair {
    let lengths: Vec<f64> = rows.iter().filter_map(|r| r.length).collect();
    let length_avg = if lengths.is_empty() {
        DEFAULT_VEHICLE_LENGTH
    } else {
        lengths.iter().sum::<f64>() / lengths.len() as f64
    };
    let interaction_type = rows
        .iter()
        .find_map(|r| r.interaction_type.clone())
        .unwrap_or_default();

    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let v_f: Vec<f64> = rows.iter().map(|r| r.v_f).collect();
    let v_l: Vec<f64> = rows.iter().map(|r| r.v_l).collect();
    let a_f_fd = forward_difference(&t, &v_f);
    let a_l_fd = forward_difference(&t, &v_l);

    let points = rows
        .iter()
        .enumerate()
        .map(|(i, r)| TrajectoryPoint {
            t: r.t,
            x_f: r.x_f,
            v_f: r.v_f,
            a_f: r.a_f.unwrap_or(a_f_fd[i]),
            x_l: r.x_l,
            v_l: r.v_l,
            a_l: r.a_l.unwrap_or(a_l_fd[i]),
        })
        .collect();
    TrajectoryPair {
        pair_id,
        interaction_type,
        points,
        length_avg,
    }
}

/// Forward finite difference `(y[i+1] - y[i]) / (t[i+1] - t[i])`; the last
/// sample repeats the previous value. A single sample yields `0`.
pub fn forward_difference(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        out[i] = (y[i + 1] - y[i]) / (t[i + 1] - t[i]);
    }
    if n >= 2 {
        out[n - 1] = out[n - 2];
    }
    out
}

/// Writes a dataset in the canonical column layout accepted by [`parse_trajectory_csv`].
pub fn write_trajectory_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trajectory_writer(ds, file)
}

pub fn write_trajectory_writer<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "pair_id",
        "interaction_type",
        "t",
        "x_f",
        "v_f",
        "a_f",
        "x_l",
        "v_l",
        "a_l",
        "length_f",
        "length_l",
    ])?;
    for pair in &ds.pairs {
        let len = pair.length_avg.to_string();
        for p in &pair.points {
            w.write_record([
                pair.pair_id.clone(),
                pair.interaction_type.clone(),
                p.t.to_string(),
                p.x_f.to_string(),
                p.v_f.to_string(),
                p.a_f.to_string(),
                p.x_l.to_string(),
                p.v_l.to_string(),
                p.a_l.to_string(),
                len.clone(),
                len.clone(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Per-point car-following states with `d = x_l - x_f - l` and `dv = v_f - v_l`.
pub fn derive_states(pair: &TrajectoryPair) -> Vec<CfState> {
    (0..pair.len()).map(|i| pair.state_at(i)).collect()
}

/// A step where trapezoidal integration of the speed column disagrees with the
/// position column.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyWarning {
    pub pair_id: String,
    pub step: usize,
    pub error: f64,
}

/// Compares `x[t+1] - x[t]` with `0.5 (v[t] + v[t+1]) Δt` for each step and
/// reports steps whose discrepancy exceeds `tol` metres.
pub fn check_consistency(pair: &TrajectoryPair, tol: f64) -> Vec<ConsistencyWarning> {
    pair.points
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let dt = w[1].t - w[0].t;
            let predicted = 0.5 * (w[0].v_f + w[1].v_f) * dt;
            let error = (w[1].x_f - w[0].x_f - predicted).abs();
            (error > tol).then(|| ConsistencyWarning {
                pair_id: pair.pair_id.clone(),
                step: i,
                error,
            })
        })
        .collect()
}

/// Thresholds applied by [`preprocess_pairs`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub min_duration: f64,
    pub max_spacing: f64,
    /// The pair's maximum speed (leader or follower) must exceed this.
    pub min_max_speed: f64,
    pub accel_min: f64,
    pub accel_max: f64,
    /// Seconds removed at both ends of each surviving pair.
    pub trim: f64,
    pub dt: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            min_duration: 10.0,
            max_spacing: 45.0,
            min_max_speed: 3.0,
            accel_min: -10.0,
            accel_max: 5.0,
            trim: 2.0,
            dt: DT,
        }
    }
}

/// Filters and trims raw pairs.
///
/// Order: whole-pair duration, spacing `(0, max]` and speed checks; removal
/// of steps with out-of-range follower acceleration (or time gaps), which
/// splits a pair into pieces that must each meet the duration rule again;
/// finally `trim` seconds are cut from both ends of each piece.
pub fn preprocess_pairs(ds: &Dataset, cfg: &PreprocessConfig) -> Dataset {
    let pairs = ds
        .pairs
        .iter()
        .filter(|p| pair_level_ok(p, cfg))
        .flat_map(|p| split_invalid_steps(p, cfg))
        .filter(|p| p.duration() + TIME_EPS >= cfg.min_duration)
        .filter_map(|p| trim_pair(p, cfg.trim))
        .collect();
    Dataset::new(pairs, ds.split_tag)
}

fn pair_level_ok(pair: &TrajectoryPair, cfg: &PreprocessConfig) -> bool {
    if pair.is_empty() || pair.duration() + TIME_EPS < cfg.min_duration {
        return false;
    }
    let spacing_ok = (0..pair.len()).all(|i| {
        let d = pair.state_at(i).d;
        d > 0.0 && d <= cfg.max_spacing
    });
    let max_speed = pair
        .points
        .iter()
        .map(|p| p.v_f.max(p.v_l))
        .fold(f64::NEG_INFINITY, f64::max);
    spacing_ok && max_speed > cfg.min_max_speed
}

fn split_invalid_steps(pair: &TrajectoryPair, cfg: &PreprocessConfig) -> Vec<TrajectoryPair> {
    let mut pieces: Vec<Vec<TrajectoryPoint>> = Vec::new();
    let mut current: Vec<TrajectoryPoint> = Vec::new();
    for p in &pair.points {
        let valid = p.a_f >= cfg.accel_min && p.a_f <= cfg.accel_max;
        let contiguous = current.last().is_none_or(|q| p.t - q.t <= 1.5 * cfg.dt);
        if (!valid || !contiguous) && !current.is_empty() {
            pieces.push(std::mem::take(&mut current));
        }
        if valid {
            current.push(*p);
        }
    }
    if !current.is_empty() {
        pieces.push(current);
    }
    let single = pieces.len() == 1;
    pieces
        .into_iter()
        .enumerate()
        .map(|(k, points)| TrajectoryPair {
            pair_id: if single {
                pair.pair_id.clone()
            } else {
                format!("{}:{k}", pair.pair_id)
            },
            interaction_type: pair.interaction_type.clone(),
            points,
            length_avg: pair.length_avg,
        })
        .collect()
}

fn trim_pair(mut pair: TrajectoryPair, trim: f64) -> Option<TrajectoryPair> {
    let t0 = pair.points.first()?.t;
    let t1 = pair.points.last()?.t;
    pair.points
        .retain(|p| p.t >= t0 + trim - TIME_EPS && p.t <= t1 - trim + TIME_EPS);
    (!pair.points.is_empty()).then_some(pair)
}

/// Deterministic shuffled split. Pairs are ordered by `pair_id` before the
/// seeded shuffle so the split does not depend on file order.
pub fn split_train_test(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut pairs = ds.pairs.clone();
    pairs.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    let mut rng = rng::stream(seed, 0, 0);
    pairs.shuffle(&mut rng);
    let n_test = (pairs.len() as f64 * test_fraction).round() as usize;
    let train = pairs.split_off(n_test);
    Ok((
        Dataset::new(train, SplitTag::Train),
        Dataset::new(pairs, SplitTag::Test),
    ))
}

/// Duration statistics in the layout of a descriptive-statistics table
/// (pairs, mean, std, max, min in seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationSummary {
    pub pairs: usize,
    pub mean: f64,
    pub std: f64,
    pub max: f64,
    pub min: f64,
}

impl DurationSummary {
    pub fn of(ds: &Dataset) -> Self {
        let d: Vec<f64> = ds.pairs.iter().map(TrajectoryPair::duration).collect();
        if d.is_empty() {
            return Self {
                pairs: 0,
                mean: 0.0,
                std: 0.0,
                max: 0.0,
                min: 0.0,
            };
        }
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        // Sample standard deviation, as spreadsheet-style summaries report.
        let std = if d.len() > 1 {
            (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            pairs: d.len(),
            mean,
            std,
            max: d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: d.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_pair(n: usize, dt: f64) -> String {
        let mut s = String::from("pair_id,t,x_f,v_f,x_l,v_l\n");
        for i in 0..n {
            let t = i as f64 * dt;
            s.push_str(&format!("p1,{t},{},10,{},10\n", 10.0 * t, 30.0 + 10.0 * t));
        }
        s
    }

    pub(crate) fn synthetic_pair(id: &str, seconds: f64, v: f64, gap: f64) -> TrajectoryPair {
        let n = (seconds / DT).round() as usize + 1;
        let points = (0..n)
            .map(|i| {
                let t = i as f64 * DT;
                TrajectoryPoint {
                    t,
                    x_f: v * t,
                    v_f: v,
                    a_f: 0.0,
                    x_l: v * t + gap + DEFAULT_VEHICLE_LENGTH,
                    v_l: v,
                    a_l: 0.0,
                }
            })
            .collect();
        TrajectoryPair {
            pair_id: id.into(),
            interaction_type: "HDV-HDV".into(),
            points,
            length_avg: DEFAULT_VEHICLE_LENGTH,
        }
    }

    #[test]
    fn ingests_single_pair() {
        let ds =
            parse_trajectory_reader(csv_pair(100, 0.1).as_bytes(), "mem", &ColumnMap::default())
                .unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.pairs[0].len(), 100);
        assert_eq!(ds.pairs[0].length_avg, DEFAULT_VEHICLE_LENGTH);
    }

    #[test]
    fn derives_missing_acceleration_by_forward_difference() {
        let csv = "pair_id,t,x_f,v_f,x_l,v_l\na,0.0,0,5.0,20,5\na,0.1,0.505,5.1,20.5,5\n";
        let ds = parse_trajectory_reader(csv.as_bytes(), "mem", &ColumnMap::default()).unwrap();
        let p = &ds.pairs[0].points;
        assert!((p[0].a_f - 1.0).abs() < 1e-12);
        assert_eq!(p[1].a_f, p[0].a_f);
        assert_eq!(p[0].a_l, 0.0);
    }

    #[test]
    fn duplicate_time_is_rejected() {
        let csv = "pair_id,t,x_f,v_f,x_l,v_l\na,0.0,0,5,20,5\na,0.0,0,5,20,5\n";
        let err =
            parse_trajectory_reader(csv.as_bytes(), "mem", &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn non_monotone_time_is_rejected() {
        let csv = "pair_id,t,x_f,v_f,x_l,v_l\na,0.1,0,5,20,5\na,0.0,0,5,20,5\n";
        let err =
            parse_trajectory_reader(csv.as_bytes(), "mem", &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "pair_id,t,x_f,v_f,x_l,v_l\na,0.0,0,5,20,5\na,0.1,zz,5,20,5\n";
        let err =
            parse_trajectory_reader(csv.as_bytes(), "mem", &ColumnMap::default()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn length_columns_set_average_length() {
        let csv = "pair_id,t,x_f,v_f,x_l,v_l,length_f,length_l\na,0.0,0,5,20,5,4,6\n";
        let ds = parse_trajectory_reader(csv.as_bytes(), "mem", &ColumnMap::default()).unwrap();
        assert_eq!(ds.pairs[0].length_avg, 5.0);
    }

    #[test]
    fn state_derivation_examples() {
        let mut pair = synthetic_pair("a", 1.0, 5.0, 10.0);
        pair.points[0] = TrajectoryPoint {
            t: 0.0,
            x_f: 5.0,
            v_f: 6.0,
            a_f: 0.0,
            x_l: 20.0,
            v_l: 4.0,
            a_l: 0.0,
        };
        assert_eq!(derive_states(&pair)[0], CfState::new(6.0, 2.0, 10.0));
        pair.points[0].v_l = 6.0;
        assert_eq!(derive_states(&pair)[0].dv, 0.0);
        pair.points[0].x_l = 10.0;
        assert_eq!(derive_states(&pair)[0].d, 0.0);
    }

    #[test]
    fn consistency_check_flags_position_jumps() {
        let mut pair = synthetic_pair("a", 2.0, 5.0, 10.0);
        assert!(check_consistency(&pair, 0.01).is_empty());
        pair.points[5].x_f += 0.5;
        let w = check_consistency(&pair, 0.01);
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].step, 4);
    }

    #[test]
    fn short_pair_is_removed() {
        let ds = Dataset::new(
            vec![synthetic_pair("a", 9.9, 10.0, 10.0)],
            SplitTag::Unsplit,
        );
        assert!(preprocess_pairs(&ds, &PreprocessConfig::default()).is_empty());
    }

    #[test]
    fn fourteen_second_pair_is_trimmed_to_ten() {
        let ds = Dataset::new(
            vec![synthetic_pair("a", 14.0, 10.0, 10.0)],
            SplitTag::Unsplit,
        );
        let out = preprocess_pairs(&ds, &PreprocessConfig::default());
        assert_eq!(out.len(), 1);
        assert!((out.pairs[0].duration() - 10.0).abs() < 1e-9);
        assert_eq!(out.pairs[0].len(), 101);
    }

    #[test]
    fn slow_pair_is_removed() {
        let ds = Dataset::new(
            vec![synthetic_pair("a", 12.0, 2.9, 10.0)],
            SplitTag::Unsplit,
        );
        assert!(preprocess_pairs(&ds, &PreprocessConfig::default()).is_empty());
    }

    #[test]
    fn wide_spacing_pair_is_removed() {
        let ds = Dataset::new(
            vec![synthetic_pair("a", 12.0, 10.0, 45.5)],
            SplitTag::Unsplit,
        );
        assert!(preprocess_pairs(&ds, &PreprocessConfig::default()).is_empty());
    }

    #[test]
    fn acceleration_outlier_splits_pair() {
        let mut pair = synthetic_pair("a", 30.0, 10.0, 10.0);
        pair.points[150].a_f = -12.0; // t = 15 s
        let out = preprocess_pairs(
            &Dataset::new(vec![pair], SplitTag::Unsplit),
            &PreprocessConfig::default(),
        );
        assert_eq!(out.len(), 2);
        assert_eq!(out.pairs[0].pair_id, "a:0");
        for p in &out.pairs {
            assert!((p.duration() - (14.9 - 4.0)).abs() < 1e-9);
            assert!(p.points.iter().all(|q| q.a_f >= -10.0 && q.a_f <= 5.0));
        }
    }

    #[test]
    fn outlier_leaving_short_piece_drops_it() {
        let mut pair = synthetic_pair("a", 16.0, 10.0, 10.0);
        pair.points[40].a_f = 7.0; // t = 4 s leaves a 3.9 s head
        let out = preprocess_pairs(
            &Dataset::new(vec![pair], SplitTag::Unsplit),
            &PreprocessConfig::default(),
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out.pairs[0].pair_id, "a:1");
    }

    #[test]
    fn split_examples() {
        let pairs: Vec<_> = (0..10)
            .map(|i| synthetic_pair(&format!("p{i}"), 1.0, 5.0, 5.0))
            .collect();
        let ds = Dataset::new(pairs, SplitTag::Unsplit);
        let (train, test) = split_train_test(&ds, 0.1, 42).unwrap();
        assert_eq!((train.len(), test.len()), (9, 1));
        assert_eq!(train.split_tag, SplitTag::Train);
        let again = split_train_test(&ds, 0.1, 42).unwrap();
        assert_eq!(again.1.pairs[0].pair_id, test.pairs[0].pair_id);

        let four = Dataset::new(ds.pairs[..4].to_vec(), SplitTag::Unsplit);
        let (a, b) = split_train_test(&four, 0.5, 1).unwrap();
        assert_eq!((a.len(), b.len()), (2, 2));
        assert!(split_train_test(&four, 1.0, 1).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_points() {
        let ds = Dataset::new(vec![synthetic_pair("a", 1.0, 5.0, 5.0)], SplitTag::Unsplit);
        let mut buf = Vec::new();
        write_trajectory_writer(&ds, &mut buf).unwrap();
        let back = parse_trajectory_reader(buf.as_slice(), "mem", &ColumnMap::default()).unwrap();
        assert_eq!(back.pairs[0].points, ds.pairs[0].points);
        assert_eq!(back.pairs[0].interaction_type, "HDV-HDV");
    }

    #[test]
    fn summary_matches_hand_values() {
        let ds = Dataset::new(
            vec![
                synthetic_pair("a", 10.0, 5.0, 5.0),
                synthetic_pair("b", 12.0, 5.0, 5.0),
            ],
            SplitTag::Unsplit,
        );
        let s = DurationSummary::of(&ds);
        assert_eq!(s.pairs, 2);
        assert!((s.mean - 11.0).abs() < 1e-9);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-9);
        assert!((s.max - 12.0).abs() < 1e-9 && (s.min - 10.0).abs() < 1e-9);
    }
}
