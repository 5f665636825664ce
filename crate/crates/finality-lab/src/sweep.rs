//! Batch tabulation over value/delay grids, and CSV emission.
//!
//! Three datasets cover the figures this laboratory exists to produce:
//!
//! * switch-depth histograms by network delay ([`SwitchHistogramRow`]),
//! * revocation probability by confirmation depth ([`RevocationRow`]),
//! * minimum confirmation depth by transaction value ([`DepthValueRow`]).
//!
//! Every builder computes each delay's curve exactly once and reuses it
//! across the value grid. CSV output goes through [`emit_csv`], which
//! writes atomically and reports the bytes written.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tempfile::NamedTempFile;
use thiserror::Error;

use crate::curve::{CurveError, RevocationCurve};
use crate::pool::{EmpiricalModel, PoolError, PoolTable, DEPTH_HARD_CAP};
use crate::risk::{min_confirmation_depth, LossModel, RiskError, RiskParams};
use crate::sim::{estimate_revocation_curve, run_simulation, SimConfig, SimError, SwitchHistogram};

/// Default transaction-value grid bounds and resolution.
pub const DEFAULT_VALUE_MIN: f64 = 0.01;
pub const DEFAULT_VALUE_MAX: f64 = 1e4;
pub const DEFAULT_VALUE_POINTS: usize = 200;

/// Default delays (in rounds) for the switch-depth histogram dataset.
pub const HISTOGRAM_DELAYS: [f64; 3] = [4.0, 6.0, 8.0];

/// Default delays (in seconds) for the pool-model datasets: the sweep
/// bounds plus typical median, 95th-percentile, and worst-case block
/// propagation times.
pub const POOL_DELAYS: [f64; 5] = [0.05, 1.0, 6.5, 40.0, 60.0];

/// Stored entries for pool-model curves in tables; queries past this keep
/// following the geometric law, so it only bounds the emitted depth rows.
pub const DEFAULT_POOL_CURVE_DEPTHS: u32 = 10;

/// Default delays (in rounds) for the simulated depth-for-value dataset.
pub fn simulated_delay_grid() -> Vec<f64> {
    (1..=10).map(f64::from).collect()
}

/// The default logarithmic transaction-value grid.
pub fn default_value_grid() -> Vec<f64> {
    log_grid(DEFAULT_VALUE_MIN, DEFAULT_VALUE_MAX, DEFAULT_VALUE_POINTS)
        .expect("default grid constants are valid")
}

/// Errors from grid validation, table building, and CSV handling.
#[derive(Debug, Error)]
pub enum SweepError {
    #[error("{grid} grid must not be empty")]
    EmptyGrid { grid: &'static str },
    #[error("{grid} grid must be finite, non-negative, and strictly increasing")]
    InvalidGrid { grid: &'static str },
    #[error("simulated delays must be whole rounds >= 1, got {0}")]
    NonIntegralDelay(f64),
    #[error("curve carries no delay tag")]
    MissingDelay,
    #[error("CSV header mismatch: expected {expected:?}, got {got:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        got: Vec<String>,
    },
    #[error("CSV row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// A sweep: transaction values crossed with network delays, against one of
/// the two revocation-curve sources.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Transaction values; finite, non-negative, strictly increasing.
    pub values: Vec<f64>,
    /// Delays: rounds for the simulated source, seconds for the pool model.
    pub delays: Vec<f64>,
    pub risk: RiskParams,
    pub source: SweepSource,
}

/// Where a sweep's revocation curves come from.
#[derive(Debug, Clone)]
pub enum SweepSource {
    /// Run the simulator at each delay, varying this base configuration.
    Simulated(SimConfig),
    /// Closed-form pool-model curves from an observed distribution.
    PoolModel {
        table: PoolTable,
        block_interval_secs: f64,
    },
}

/// Row of `switch_histogram.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchHistogramRow {
    pub delay: f64,
    pub switch_depth: u32,
    pub count: u64,
    pub trials: u32,
    pub count_per_trial: f64,
}

/// Row of a revocation-curve table.
#[derive(Debug, Clone, PartialEq)]
pub struct RevocationRow {
    pub delay: f64,
    pub depth: u32,
    pub p_rev: f64,
}

/// Row of a depth-for-value table. `satisfied = false` (with `min_depth`
/// 0) marks (delay, value) cells where no searched depth met the loss
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthValueRow {
    pub delay: f64,
    pub value: f64,
    pub min_depth: u32,
    pub satisfied: bool,
}

/// A row type with a fixed header that round-trips through CSV.
pub trait CsvRecord: Sized {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
    /// Parses one data record; the error is a bare reason, row context is
    /// added by the caller.
    fn parse_fields(record: &csv::StringRecord) -> Result<Self, String>;
}

fn field<T: FromStr>(record: &csv::StringRecord, index: usize, name: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    let raw = record
        .get(index)
        .ok_or_else(|| format!("missing field '{name}'"))?;
    raw.parse()
        .map_err(|e| format!("field '{name}' = {raw:?}: {e}"))
}

impl CsvRecord for SwitchHistogramRow {
    const HEADER: &'static [&'static str] = &[
        "delay",
        "switch_depth",
        "count",
        "trials",
        "count_per_trial",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.delay.to_string(),
            self.switch_depth.to_string(),
            self.count.to_string(),
            self.trials.to_string(),
            self.count_per_trial.to_string(),
        ]
    }

    fn parse_fields(record: &csv::StringRecord) -> Result<Self, String> {
        Ok(Self {
            delay: field(record, 0, "delay")?,
            switch_depth: field(record, 1, "switch_depth")?,
            count: field(record, 2, "count")?,
            trials: field(record, 3, "trials")?,
            count_per_trial: field(record, 4, "count_per_trial")?,
        })
    }
}

impl CsvRecord for RevocationRow {
    const HEADER: &'static [&'static str] = &["delay", "depth", "p_rev"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.delay.to_string(),
            self.depth.to_string(),
            self.p_rev.to_string(),
        ]
    }

    fn parse_fields(record: &csv::StringRecord) -> Result<Self, String> {
        Ok(Self {
            delay: field(record, 0, "delay")?,
            depth: field(record, 1, "depth")?,
            p_rev: field(record, 2, "p_rev")?,
        })
    }
}

impl CsvRecord for DepthValueRow {
    const HEADER: &'static [&'static str] = &["delay", "value", "min_depth", "satisfied"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.delay.to_string(),
            self.value.to_string(),
            self.min_depth.to_string(),
            self.satisfied.to_string(),
        ]
    }

    fn parse_fields(record: &csv::StringRecord) -> Result<Self, String> {
        Ok(Self {
            delay: field(record, 0, "delay")?,
            value: field(record, 1, "value")?,
            min_depth: field(record, 2, "min_depth")?,
            satisfied: field(record, 3, "satisfied")?,
        })
    }
}

fn validate_grid(grid: &[f64], name: &'static str) -> Result<(), SweepError> {
    if grid.is_empty() {
        return Err(SweepError::EmptyGrid { grid: name });
    }
    if grid.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(SweepError::InvalidGrid { grid: name });
    }
    if grid.windows(2).any(|pair| pair[0] >= pair[1]) {
        return Err(SweepError::InvalidGrid { grid: name });
    }
    Ok(())
}

/// Logarithmically spaced grid from `min` to `max`, inclusive of both.
pub fn log_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>, SweepError> {
    if !(min > 0.0 && min.is_finite() && max.is_finite() && max > min) || points < 2 {
        return Err(SweepError::InvalidGrid { grid: "value" });
    }
    let ratio = max / min;
    let mut grid: Vec<f64> = (0..points)
        .map(|i| min * ratio.powf(i as f64 / (points - 1) as f64))
        .collect();
    grid[points - 1] = max;
    validate_grid(&grid, "value")?;
    Ok(grid)
}

/// Converts a delay grid to whole rounds for the simulator.
pub fn rounds_grid(delays: &[f64]) -> Result<Vec<u32>, SweepError> {
    delays
        .iter()
        .map(|&d| {
            if d >= 1.0 && d <= f64::from(u32::MAX) && d.fract() == 0.0 {
                Ok(d as u32)
            } else {
                Err(SweepError::NonIntegralDelay(d))
            }
        })
        .collect()
}

/// Runs the simulator once per delay (in rounds), returning histograms in
/// delay order. The histograms serve both the switch table and curve
/// estimation, so each delay is simulated exactly once.
pub fn simulate_delays(
    base: &SimConfig,
    delays: &[u32],
) -> Result<Vec<SwitchHistogram>, SweepError> {
    if delays.is_empty() {
        return Err(SweepError::EmptyGrid { grid: "delay" });
    }
    delays
        .iter()
        .map(|&d| run_simulation(&base.clone().with_delay_rounds(d)).map_err(Into::into))
        .collect()
}

/// Flattens histograms into `(delay, switch_depth)` rows, normalizing each
/// count by the trial count.
pub fn switch_histogram_rows(histograms: &[SwitchHistogram]) -> Vec<SwitchHistogramRow> {
    let mut rows = Vec::new();
    for histogram in histograms {
        let delay = histogram.config.delay.scalar();
        for (&depth, &count) in &histogram.counts {
            rows.push(SwitchHistogramRow {
                delay,
                switch_depth: depth,
                count,
                trials: histogram.trials,
                count_per_trial: count as f64 / f64::from(histogram.trials),
            });
        }
    }
    rows
}

/// Flattens curves into `(delay, depth)` rows over their stored entries.
pub fn revocation_rows(curves: &[RevocationCurve]) -> Result<Vec<RevocationRow>, SweepError> {
    let mut rows = Vec::new();
    for curve in curves {
        let delay = curve.delay().ok_or(SweepError::MissingDelay)?;
        for (depth, p_rev) in curve.entries() {
            rows.push(RevocationRow {
                delay,
                depth,
                p_rev,
            });
        }
    }
    Ok(rows)
}

/// Estimates one revocation curve per histogram.
pub fn estimate_all(histograms: &[SwitchHistogram]) -> Result<Vec<RevocationCurve>, SweepError> {
    histograms
        .iter()
        .map(|h| estimate_revocation_curve(h).map_err(Into::into))
        .collect()
}

/// One revocation curve per requested delay, each computed exactly once.
pub fn sweep_curves(spec: &SweepSpec) -> Result<Vec<RevocationCurve>, SweepError> {
    validate_grid(&spec.delays, "delay")?;
    match &spec.source {
        SweepSource::Simulated(base) => {
            let rounds = rounds_grid(&spec.delays)?;
            let histograms = simulate_delays(base, &rounds)?;
            estimate_all(&histograms)
        }
        SweepSource::PoolModel {
            table,
            block_interval_secs,
        } => spec
            .delays
            .iter()
            .map(|&delay| {
                Ok(EmpiricalModel::new(table, delay, *block_interval_secs)?
                    .revocation_curve(DEFAULT_POOL_CURVE_DEPTHS))
            })
            .collect(),
    }
}

/// One row per (delay, value): the minimum depth meeting the loss threshold
/// on that delay's curve. Extensible curves are searched to
/// [`DEPTH_HARD_CAP`], estimated ones to their stored depth; cells where no
/// depth qualifies get `min_depth = 0, satisfied = false`.
pub fn depth_value_rows(
    values: &[f64],
    curves: &[RevocationCurve],
    model: &LossModel,
) -> Result<Vec<DepthValueRow>, SweepError> {
    validate_grid(values, "value")?;
    let mut rows = Vec::with_capacity(values.len() * curves.len());
    for curve in curves {
        let delay = curve.delay().ok_or(SweepError::MissingDelay)?;
        let budget = if curve.is_extensible() {
            DEPTH_HARD_CAP
        } else {
            curve.max_stored_depth()
        };
        for &value in values {
            match min_confirmation_depth(value, curve, model, budget) {
                Ok(min_depth) => rows.push(DepthValueRow {
                    delay,
                    value,
                    min_depth,
                    satisfied: true,
                }),
                Err(RiskError::NoDepthSatisfies { .. }) => rows.push(DepthValueRow {
                    delay,
                    value,
                    min_depth: 0,
                    satisfied: false,
                }),
                Err(other) => return Err(other.into()),
            }
        }
    }
    Ok(rows)
}

/// Builds the full depth-for-value table for a sweep spec.
pub fn depth_value_table(spec: &SweepSpec) -> Result<Vec<DepthValueRow>, SweepError> {
    validate_grid(&spec.values, "value")?;
    let model = LossModel::calibrate(spec.risk)?;
    let curves = sweep_curves(spec)?;
    depth_value_rows(&spec.values, &curves, &model)
}

/// Renders rows (header first) to CSV text.
pub fn render_csv<R: CsvRecord>(rows: &[R]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(R::HEADER)
        .expect("vec sink cannot fail");
    for row in rows {
        writer
            .write_record(row.fields())
            .expect("vec sink cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("vec sink cannot fail"))
        .expect("csv output is utf-8")
}

/// Writes rows to `dest` atomically (temp file plus rename in the same
/// directory), returning the bytes written. A crash mid-write leaves either
/// the old file or the new one, never a torn mix.
pub fn emit_csv<R: CsvRecord>(rows: &[R], dest: &Path) -> Result<u64, SweepError> {
    let text = render_csv(rows);
    let dir = match dest.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let io_err = |source| SweepError::Io {
        path: dest.to_path_buf(),
        source,
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(text.as_bytes()).map_err(io_err)?;
    tmp.persist(dest).map_err(|e| io_err(e.error))?;
    Ok(text.len() as u64)
}

/// Parses CSV text produced by [`render_csv`], checking the header.
pub fn parse_csv<R: CsvRecord>(text: &str) -> Result<Vec<R>, SweepError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| SweepError::MalformedRow {
            row: i + 1,
            reason: e.to_string(),
        })?;
        if i == 0 {
            if record.iter().ne(R::HEADER.iter().copied()) {
                return Err(SweepError::HeaderMismatch {
                    expected: R::HEADER.iter().map(|s| s.to_string()).collect(),
                    got: record.iter().map(String::from).collect(),
                });
            }
            saw_header = true;
            continue;
        }
        rows.push(
            R::parse_fields(&record)
                .map_err(|reason| SweepError::MalformedRow { row: i + 1, reason })?,
        );
    }
    if !saw_header {
        return Err(SweepError::HeaderMismatch {
            expected: R::HEADER.iter().map(|s| s.to_string()).collect(),
            got: Vec::new(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Provenance;

    fn default_model() -> LossModel {
        LossModel::calibrate(RiskParams::default()).unwrap()
    }

    fn fixture_table() -> PoolTable {
        PoolTable::parse(include_str!("../fixtures/pools.csv")).unwrap()
    }

    #[test]
    fn log_grid_hits_both_endpoints_and_stays_increasing() {
        let grid = log_grid(0.01, 1e4, 200).unwrap();
        assert_eq!(grid.len(), 200);
        assert_eq!(grid[0], 0.01);
        assert_eq!(grid[199], 1e4);
        assert!(grid.windows(2).all(|p| p[0] < p[1]));
        assert!(log_grid(0.0, 1.0, 10).is_err());
        assert!(log_grid(1.0, 1.0, 10).is_err());
        assert!(log_grid(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn grids_are_validated() {
        assert!(matches!(
            depth_value_rows(&[], &[], &default_model()).unwrap_err(),
            SweepError::EmptyGrid { grid: "value" }
        ));
        let curve = RevocationCurve::geometric(0.5, 4).unwrap().with_delay(1.0);
        for bad in [
            vec![2.0, 1.0],
            vec![1.0, 1.0],
            vec![-1.0, 1.0],
            vec![f64::NAN],
        ] {
            assert!(matches!(
                depth_value_rows(&bad, std::slice::from_ref(&curve), &default_model()).unwrap_err(),
                SweepError::InvalidGrid { grid: "value" }
            ));
        }
    }

    #[test]
    fn rounds_grid_requires_whole_positive_rounds() {
        assert_eq!(rounds_grid(&[1.0, 4.0]).unwrap(), vec![1, 4]);
        assert!(matches!(
            rounds_grid(&[0.5]).unwrap_err(),
            SweepError::NonIntegralDelay(_)
        ));
        assert!(matches!(
            rounds_grid(&[0.0]).unwrap_err(),
            SweepError::NonIntegralDelay(_)
        ));
        assert!(matches!(
            rounds_grid(&[2.5]).unwrap_err(),
            SweepError::NonIntegralDelay(_)
        ));
    }

    #[test]
    fn depth_value_rows_cover_the_grid_in_order() {
        let model = default_model();
        let halving = RevocationCurve::geometric(0.5, 8).unwrap().with_delay(1.0);
        let stubborn =
            RevocationCurve::from_probabilities(vec![0.9, 0.9], Provenance::Simulated, Some(2.0))
                .unwrap();
        let rows = depth_value_rows(&[1.0, 15.0], &[halving, stubborn], &model).unwrap();
        assert_eq!(
            rows,
            vec![
                // Halving curve: LT(1) = 0.5 is met at depth 1 (inclusive
                // boundary); LT(15) ~ 5.46e-4 needs depth 11, past the
                // stored entries but within the geometric extension.
                DepthValueRow {
                    delay: 1.0,
                    value: 1.0,
                    min_depth: 1,
                    satisfied: true
                },
                DepthValueRow {
                    delay: 1.0,
                    value: 15.0,
                    min_depth: 11,
                    satisfied: true
                },
                // The stubborn curve never drops below 0.9.
                DepthValueRow {
                    delay: 2.0,
                    value: 1.0,
                    min_depth: 0,
                    satisfied: false
                },
                DepthValueRow {
                    delay: 2.0,
                    value: 15.0,
                    min_depth: 0,
                    satisfied: false
                },
            ]
        );
    }

    #[test]
    fn pool_sweep_reuses_one_curve_per_delay() {
        let spec = SweepSpec {
            values: vec![1.0, 100.0],
            delays: vec![0.05, 1.0],
            risk: RiskParams::default(),
            source: SweepSource::PoolModel {
                table: fixture_table(),
                block_interval_secs: 600.0,
            },
        };
        let rows = depth_value_table(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.satisfied));
        // At 1s delay the hand-computed depth for value 100 is 7.
        let row = rows
            .iter()
            .find(|r| r.delay == 1.0 && r.value == 100.0)
            .unwrap();
        assert_eq!(row.min_depth, 7);
        // Tiny delay, tiny value: the anchor threshold is met immediately.
        let row = rows
            .iter()
            .find(|r| r.delay == 0.05 && r.value == 1.0)
            .unwrap();
        assert_eq!(row.min_depth, 1);
    }

    #[test]
    fn simulated_sweep_tags_curves_with_their_delay() {
        let base = SimConfig {
            rounds: 80,
            trials: 3,
            ..SimConfig::new(3)
        };
        let spec = SweepSpec {
            values: vec![1.0],
            delays: vec![1.0, 2.0],
            risk: RiskParams::default(),
            source: SweepSource::Simulated(base),
        };
        let curves = sweep_curves(&spec).unwrap();
        assert_eq!(curves.len(), 2);
        assert_eq!(curves[0].delay(), Some(1.0));
        assert_eq!(curves[1].delay(), Some(2.0));
        for curve in &curves {
            let probs: Vec<f64> = curve.entries().map(|(_, p)| p).collect();
            assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
            assert!(probs.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn histogram_rows_normalize_by_trials() {
        let base = SimConfig {
            rounds: 120,
            trials: 4,
            ..SimConfig::new(3)
        };
        let histograms = simulate_delays(&base, &[2, 3]).unwrap();
        let rows = switch_histogram_rows(&histograms);
        assert!(!rows.is_empty(), "forks are common at these delays");
        for row in &rows {
            assert_eq!(row.trials, 4);
            assert_eq!(row.count_per_trial, row.count as f64 / 4.0);
        }
        // Rows arrive sorted by (delay, depth).
        let keys: Vec<(f64, u32)> = rows.iter().map(|r| (r.delay, r.switch_depth)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(keys, sorted);
    }

    #[test]
    fn csv_round_trips_exactly() {
        let rows = vec![
            DepthValueRow {
                delay: 0.05,
                value: 0.01,
                min_depth: 1,
                satisfied: true,
            },
            DepthValueRow {
                delay: 60.0,
                value: 123.456789012345,
                min_depth: 0,
                satisfied: false,
            },
        ];
        let text = render_csv(&rows);
        assert!(text.starts_with("delay,value,min_depth,satisfied\n"));
        let back: Vec<DepthValueRow> = parse_csv(&text).unwrap();
        assert_eq!(back, rows);

        let rev = vec![RevocationRow {
            delay: 1.0,
            depth: 3,
            p_rev: 1.394338817154413e-3,
        }];
        let back: Vec<RevocationRow> = parse_csv(&render_csv(&rev)).unwrap();
        assert_eq!(back, rev);

        let hist = vec![SwitchHistogramRow {
            delay: 4.0,
            switch_depth: 2,
            count: 37,
            trials: 200,
            count_per_trial: 0.185,
        }];
        let back: Vec<SwitchHistogramRow> = parse_csv(&render_csv(&hist)).unwrap();
        assert_eq!(back, hist);
    }

    #[test]
    fn parse_rejects_wrong_header_and_bad_rows() {
        let err = parse_csv::<RevocationRow>("delay,depth,probability\n1,1,0.5\n").unwrap_err();
        assert!(matches!(err, SweepError::HeaderMismatch { .. }));
        let err = parse_csv::<RevocationRow>("delay,depth,p_rev\n1,one,0.5\n").unwrap_err();
        assert!(matches!(err, SweepError::MalformedRow { row: 2, .. }));
        let err = parse_csv::<RevocationRow>("").unwrap_err();
        assert!(matches!(err, SweepError::HeaderMismatch { .. }));
    }

    #[test]
    fn emit_csv_writes_atomically_and_reports_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("rows.csv");
        let rows = vec![RevocationRow {
            delay: 1.0,
            depth: 1,
            p_rev: 0.5,
        }];
        let bytes = emit_csv(&rows, &dest).unwrap();
        let on_disk = std::fs::read_to_string(&dest).unwrap();
        assert_eq!(on_disk.len() as u64, bytes);
        assert_eq!(on_disk, render_csv(&rows));
        // Overwriting in place works and leaves no temp files behind.
        let bytes = emit_csv(&rows[..0], &dest).unwrap();
        assert_eq!(std::fs::read_to_string(&dest).unwrap().len() as u64, bytes);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn emit_csv_surfaces_the_destination_path_on_failure() {
        let dest = Path::new("definitely/not/a/dir/rows.csv");
        let err = emit_csv::<RevocationRow>(&[], dest).unwrap_err();
        match err {
            SweepError::Io { path, .. } => assert_eq!(path, dest),
            other => panic!("unexpected error: {other}"),
        }
    }
}
