//! The `finality-lab` command-line interface.
//!
//! Four subcommands: `simulate` (fork simulations and their datasets),
//! `pools` (the closed-form pool model), `risk` (a one-value calculator),
//! and `sweep` (the full four-dataset bundle). Exit codes: 0 on success,
//! 1 when a computation or write fails, 2 for invalid flags or parameters.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::curve::{Provenance, RevocationCurve};
use crate::pool::{EmpiricalModel, PoolTable, DEPTH_HARD_CAP};
use crate::risk::{min_confirmation_depth, LossModel, RiskError, RiskParams, UNDERFLOW_FLOOR};
use crate::sim::{DelayModel, SimConfig, DEFAULT_SEED};
use crate::sweep::{
    default_value_grid, depth_value_rows, emit_csv, estimate_all, parse_csv, revocation_rows,
    rounds_grid, simulate_delays, switch_histogram_rows, CsvRecord, RevocationRow,
    DEFAULT_POOL_CURVE_DEPTHS, DEFAULT_VALUE_MAX, DEFAULT_VALUE_MIN, DEFAULT_VALUE_POINTS,
    HISTOGRAM_DELAYS, POOL_DELAYS,
};

/// The bundled 1000-block pool observation, used when no table is given.
const BUNDLED_POOLS: &str = include_str!("../fixtures/pools.csv");

#[derive(Debug, Parser)]
#[command(
    name = "finality-lab",
    version,
    about = "Confirmation-depth laboratory for longest-chain blockchains"
)]
pub struct Cli {
    #[command(flatten)]
    pub globals: Globals,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Globals {
    /// Root RNG seed for simulations.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Directory for emitted CSV files.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Loss-aversion coefficient.
    #[arg(long, global = true, default_value_t = 2.25)]
    pub lambda: f64,
    /// Diminishing-sensitivity exponent, in (0, 1).
    #[arg(long, global = true, default_value_t = 0.88)]
    pub beta: f64,
    /// Calibration anchor: transaction value.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub anchor_value: f64,
    /// Calibration anchor: acceptable revocation probability at that value.
    #[arg(long, global = true, default_value_t = 0.5)]
    pub anchor_prob: f64,
    /// Expected seconds between blocks (pool model).
    #[arg(long, global = true, default_value_t = 600.0)]
    pub block_interval: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate competing miners and emit switch/revocation/depth datasets.
    Simulate(SimulateArgs),
    /// Evaluate the pool fork-rate model from an observed distribution.
    Pools(PoolsArgs),
    /// Compute loss, loss threshold, and minimum depth for one value.
    Risk(RiskArgs),
    /// Produce the full four-dataset bundle.
    Sweep(SweepArgs),
}

/// Delay model selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DelayKind {
    /// Every delivery takes exactly the configured number of rounds.
    Fixed,
    /// Each delivery draws uniformly from 1..=delay rounds.
    Uniform,
}

impl DelayKind {
    fn to_model(self, rounds: u32) -> DelayModel {
        match self {
            DelayKind::Fixed => DelayModel::Fixed(rounds),
            DelayKind::Uniform => DelayModel::UniformUpTo(rounds),
        }
    }
}

/// Transaction-value grid flags shared by the dataset commands.
#[derive(Debug, Args)]
pub struct ValueGrid {
    /// Explicit transaction values (overrides the log grid).
    #[arg(
        long = "value",
        value_delimiter = ',',
        conflicts_with_all = ["value_min", "value_max", "value_points"]
    )]
    pub value: Vec<f64>,
    /// Smallest value of the log grid.
    #[arg(long, default_value_t = DEFAULT_VALUE_MIN)]
    pub value_min: f64,
    /// Largest value of the log grid.
    #[arg(long, default_value_t = DEFAULT_VALUE_MAX)]
    pub value_max: f64,
    /// Number of log-grid points.
    #[arg(long, default_value_t = DEFAULT_VALUE_POINTS)]
    pub value_points: usize,
}

impl ValueGrid {
    fn resolve(&self) -> Result<Vec<f64>, AppError> {
        if !self.value.is_empty() {
            return sorted_values(&self.value);
        }
        if self.value_min == DEFAULT_VALUE_MIN
            && self.value_max == DEFAULT_VALUE_MAX
            && self.value_points == DEFAULT_VALUE_POINTS
        {
            return Ok(default_value_grid());
        }
        crate::sweep::log_grid(self.value_min, self.value_max, self.value_points)
            .map_err(|e| AppError::Usage(e.to_string()))
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of miners.
    #[arg(long, default_value_t = 100)]
    pub miners: u32,
    /// Rounds per trial.
    #[arg(long, default_value_t = 1000)]
    pub rounds: u32,
    /// Trials per delay.
    #[arg(long, default_value_t = 10)]
    pub trials: u32,
    /// Per-miner per-round mining probability [default: 1/miners].
    #[arg(long)]
    pub mine_prob: Option<f64>,
    /// Network delays to sweep, in rounds.
    #[arg(long, value_delimiter = ',', default_values_t = [4u32, 6, 8])]
    pub delays: Vec<u32>,
    /// Delay model.
    #[arg(long, value_enum, default_value_t = DelayKind::Fixed)]
    pub delay_model: DelayKind,
    #[command(flatten)]
    pub values: ValueGrid,
}

#[derive(Debug, Args)]
pub struct PoolsArgs {
    /// Pool distribution CSV with a `pool,blocks` header. Defaults to a
    /// bundled 1000-block observation.
    #[arg(long, value_name = "FILE")]
    pub table: Option<PathBuf>,
    /// Delays to sweep, in seconds.
    #[arg(long, value_delimiter = ',', default_values_t = POOL_DELAYS)]
    pub delays: Vec<f64>,
    /// Stored depth rows for the revocation table.
    #[arg(long, default_value_t = DEFAULT_POOL_CURVE_DEPTHS)]
    pub depths: u32,
    /// Answer a single delay (seconds) on stdout instead of writing files.
    #[arg(long, conflicts_with = "delays")]
    pub delay: Option<f64>,
    #[command(flatten)]
    pub values: ValueGrid,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    /// Transaction value.
    #[arg(long)]
    pub value: f64,
    /// Depth-one revocation probability of a geometric curve to search.
    #[arg(long, conflicts_with = "curve")]
    pub p1: Option<f64>,
    /// Revocation-curve CSV (`delay,depth,p_rev`) to search.
    #[arg(long, value_name = "FILE")]
    pub curve: Option<PathBuf>,
    /// Select this delay's rows when the curve file has several.
    #[arg(long, requires = "curve")]
    pub curve_delay: Option<f64>,
    /// Deepest depth to search.
    #[arg(long, default_value_t = DEPTH_HARD_CAP)]
    pub max_depth: u32,
}

/// Dataset family selector for `sweep --delays`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceKind {
    /// Every dataset at its default delays.
    All,
    /// `--delays` (rounds) applies to the simulated datasets.
    Simulated,
    /// `--delays` (seconds) applies to the pool-model datasets.
    PoolModel,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Which dataset family `--delays` applies to.
    #[arg(long, value_enum, default_value_t = SourceKind::All)]
    pub source: SourceKind,
    /// Delay grid override for the chosen source.
    #[arg(long, value_delimiter = ',')]
    pub delays: Vec<f64>,
    /// Pool distribution CSV (defaults to the bundled observation).
    #[arg(long, value_name = "FILE")]
    pub table: Option<PathBuf>,
    /// Number of miners.
    #[arg(long, default_value_t = 100)]
    pub miners: u32,
    /// Rounds per trial.
    #[arg(long, default_value_t = 1000)]
    pub rounds: u32,
    /// Trials per delay.
    #[arg(long, default_value_t = 10)]
    pub trials: u32,
    /// Per-miner per-round mining probability [default: 1/miners].
    #[arg(long)]
    pub mine_prob: Option<f64>,
    /// Delay model for the simulated datasets.
    #[arg(long, value_enum, default_value_t = DelayKind::Fixed)]
    pub delay_model: DelayKind,
    /// Stored depth rows for the pool revocation table.
    #[arg(long, default_value_t = DEFAULT_POOL_CURVE_DEPTHS)]
    pub depths: u32,
    #[command(flatten)]
    pub values: ValueGrid,
}

/// CLI-level error, carrying the exit code distinction.
#[derive(Debug)]
enum AppError {
    /// Invalid flags or parameters: exit 2.
    Usage(String),
    /// A computation or write failed: exit 1.
    Failure(String),
}

/// Parses arguments from the process environment, runs, and returns the
/// exit code. Flag parse errors exit directly (code 2); `--help` and
/// `--version` exit 0.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return 2;
    }
    match run(cli) {
        Ok(()) => 0,
        Err(AppError::Usage(message)) => {
            eprintln!("error: {message}");
            2
        }
        Err(AppError::Failure(message)) => {
            eprintln!("error: {message}");
            1
        }
    }
}

/// Applies `FINALITY_LAB_THREADS` to the global worker pool.
fn configure_threads() -> Result<(), String> {
    let raw = match std::env::var("FINALITY_LAB_THREADS") {
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(format!("FINALITY_LAB_THREADS: {e}")),
        Ok(raw) => raw,
    };
    let threads: usize =
        raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            format!("FINALITY_LAB_THREADS must be a positive integer, got {raw:?}")
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| format!("thread pool: {e}"))
}

fn run(cli: Cli) -> Result<(), AppError> {
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(&cli.globals, args),
        Command::Pools(args) => cmd_pools(&cli.globals, args),
        Command::Risk(args) => cmd_risk(&cli.globals, args),
        Command::Sweep(args) => cmd_sweep(&cli.globals, args),
    }
}

fn usage(e: impl std::fmt::Display) -> AppError {
    AppError::Usage(e.to_string())
}

fn failure(e: impl std::fmt::Display) -> AppError {
    AppError::Failure(e.to_string())
}

fn calibrated_model(globals: &Globals) -> Result<LossModel, AppError> {
    LossModel::calibrate(RiskParams {
        lambda: globals.lambda,
        beta: globals.beta,
        anchor_value: globals.anchor_value,
        anchor_probability: globals.anchor_prob,
    })
    .map_err(usage)
}

fn sim_config(
    globals: &Globals,
    miners: u32,
    rounds: u32,
    trials: u32,
    mine_prob: Option<f64>,
    delay_model: DelayKind,
) -> Result<SimConfig, AppError> {
    let config = SimConfig {
        n_miners: miners,
        rounds,
        trials,
        mine_prob: mine_prob.unwrap_or(1.0 / f64::from(miners.max(1))),
        delay: delay_model.to_model(1),
        seed: globals.seed,
    };
    config.validate().map_err(usage)?;
    Ok(config)
}

fn load_table(path: Option<&Path>) -> Result<PoolTable, AppError> {
    match path {
        None => Ok(PoolTable::parse(BUNDLED_POOLS).expect("bundled table is valid")),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| AppError::Failure(format!("reading {}: {e}", path.display())))?;
            PoolTable::parse(&text)
                .map_err(|e| AppError::Failure(format!("{}: {e}", path.display())))
        }
    }
}

/// Validates, sorts, and dedups an explicit value list.
fn sorted_values(raw: &[f64]) -> Result<Vec<f64>, AppError> {
    if raw.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(AppError::Usage(
            "values must be finite and non-negative".into(),
        ));
    }
    let mut values = raw.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    Ok(values)
}

/// Validates, sorts, and dedups a delay list; empty lists are an error.
fn sorted_delays(raw: &[f64]) -> Result<Vec<f64>, AppError> {
    if raw.is_empty() {
        return Err(AppError::Usage("at least one delay is required".into()));
    }
    if raw.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(AppError::Usage(
            "delays must be finite and non-negative".into(),
        ));
    }
    let mut delays = raw.to_vec();
    delays.sort_by(f64::total_cmp);
    delays.dedup();
    Ok(delays)
}

fn ensure_out_dir(dir: &Path) -> Result<(), AppError> {
    fs::create_dir_all(dir)
        .map_err(|e| AppError::Failure(format!("creating {}: {e}", dir.display())))
}

fn write_rows<R: CsvRecord>(rows: &[R], dir: &Path, name: &str) -> Result<(), AppError> {
    let dest = dir.join(name);
    let bytes = emit_csv(rows, &dest).map_err(failure)?;
    println!("wrote {} ({bytes} bytes)", dest.display());
    Ok(())
}

/// Builds pool-model curves for a list of delays, one per delay.
fn pool_curves(
    table: &PoolTable,
    delays: &[f64],
    block_interval: f64,
    stored_depths: u32,
) -> Result<Vec<RevocationCurve>, AppError> {
    delays
        .iter()
        .map(|&delay| {
            EmpiricalModel::new(table, delay, block_interval)
                .map(|m| m.revocation_curve(stored_depths))
                .map_err(usage)
        })
        .collect()
}

fn cmd_simulate(globals: &Globals, args: &SimulateArgs) -> Result<(), AppError> {
    let model = calibrated_model(globals)?;
    let values = args.values.resolve()?;
    let mut delays = args.delays.clone();
    delays.sort_unstable();
    delays.dedup();
    if delays.is_empty() {
        return Err(AppError::Usage("at least one delay is required".into()));
    }
    if delays[0] == 0 {
        return Err(AppError::Usage("delays must be at least 1 round".into()));
    }
    let base = sim_config(
        globals,
        args.miners,
        args.rounds,
        args.trials,
        args.mine_prob,
        args.delay_model,
    )?;
    let histograms = simulate_delays(&base, &delays).map_err(failure)?;
    let curves = estimate_all(&histograms).map_err(failure)?;
    ensure_out_dir(&globals.out_dir)?;
    write_rows(
        &switch_histogram_rows(&histograms),
        &globals.out_dir,
        "switch_histogram.csv",
    )?;
    write_rows(
        &revocation_rows(&curves).map_err(failure)?,
        &globals.out_dir,
        "revocation_simulated.csv",
    )?;
    write_rows(
        &depth_value_rows(&values, &curves, &model).map_err(failure)?,
        &globals.out_dir,
        "depth_value_simulated.csv",
    )?;
    Ok(())
}

fn cmd_pools(globals: &Globals, args: &PoolsArgs) -> Result<(), AppError> {
    let model = calibrated_model(globals)?;
    let table = load_table(args.table.as_deref())?;
    if let Some(delay) = args.delay {
        // One-shot query mode: print, write nothing.
        let empirical =
            EmpiricalModel::new(&table, delay, globals.block_interval).map_err(usage)?;
        println!("P1(delay={delay}) = {}", empirical.depth_one_revocation());
        if !args.values.value.is_empty() {
            let curve = empirical.revocation_curve(args.depths);
            for &value in &sorted_values(&args.values.value)? {
                match min_confirmation_depth(value, &curve, &model, DEPTH_HARD_CAP) {
                    Ok(depth) => println!("min_depth(value={value}) = {depth}"),
                    Err(e @ RiskError::NoDepthSatisfies { .. }) => return Err(failure(e)),
                    Err(e) => return Err(usage(e)),
                }
            }
        }
        return Ok(());
    }
    let values = args.values.resolve()?;
    let delays = sorted_delays(&args.delays)?;
    if args.depths == 0 {
        return Err(AppError::Usage("--depths must be at least 1".into()));
    }
    let curves = pool_curves(&table, &delays, globals.block_interval, args.depths)?;
    ensure_out_dir(&globals.out_dir)?;
    write_rows(
        &revocation_rows(&curves).map_err(failure)?,
        &globals.out_dir,
        "revocation_pool.csv",
    )?;
    write_rows(
        &depth_value_rows(&values, &curves, &model).map_err(failure)?,
        &globals.out_dir,
        "depth_value_pool.csv",
    )?;
    Ok(())
}

fn cmd_risk(globals: &Globals, args: &RiskArgs) -> Result<(), AppError> {
    let model = calibrated_model(globals)?;
    let loss = model.params().loss(args.value).map_err(usage)?;
    let threshold = model
        .loss_threshold(args.value)
        .expect("value was validated by loss()");
    println!("loss({}) = {loss}", args.value);
    if threshold.underflowed {
        println!(
            "loss_threshold({}) = 0 (saturated below {UNDERFLOW_FLOOR:e})",
            args.value
        );
    } else {
        println!(
            "loss_threshold({}) = {:e}",
            args.value, threshold.probability
        );
    }
    let curve = if let Some(p1) = args.p1 {
        Some(RevocationCurve::geometric(p1, DEFAULT_POOL_CURVE_DEPTHS).map_err(usage)?)
    } else if let Some(path) = &args.curve {
        let text = fs::read_to_string(path)
            .map_err(|e| AppError::Failure(format!("reading {}: {e}", path.display())))?;
        let rows: Vec<RevocationRow> =
            parse_csv(&text).map_err(|e| AppError::Failure(format!("{}: {e}", path.display())))?;
        Some(curve_from_rows(&rows, args.curve_delay)?)
    } else {
        None
    };
    if let Some(curve) = curve {
        match min_confirmation_depth(args.value, &curve, &model, args.max_depth) {
            Ok(depth) => println!("min_depth = {depth}"),
            Err(e @ RiskError::NoDepthSatisfies { .. }) => return Err(failure(e)),
            Err(e) => return Err(usage(e)),
        }
    }
    Ok(())
}

/// Reassembles a revocation curve from table rows, selecting one delay.
fn curve_from_rows(
    rows: &[RevocationRow],
    selector: Option<f64>,
) -> Result<RevocationCurve, AppError> {
    let mut delays: Vec<f64> = rows.iter().map(|r| r.delay).collect();
    delays.sort_by(f64::total_cmp);
    delays.dedup();
    let chosen = match (selector, delays.as_slice()) {
        (Some(d), _) => d,
        (None, [single]) => *single,
        (None, many) => {
            return Err(AppError::Usage(format!(
                "curve file holds {} delays; pass --curve-delay to choose one",
                many.len()
            )))
        }
    };
    let mut pairs: Vec<(u32, f64)> = rows
        .iter()
        .filter(|r| r.delay == chosen)
        .map(|r| (r.depth, r.p_rev))
        .collect();
    pairs.sort_unstable_by_key(|&(depth, _)| depth);
    if pairs.is_empty() {
        return Err(AppError::Usage(format!(
            "curve file has no rows at delay {chosen}"
        )));
    }
    RevocationCurve::from_pairs(&pairs, Provenance::Synthetic, Some(chosen)).map_err(failure)
}

fn cmd_sweep(globals: &Globals, args: &SweepArgs) -> Result<(), AppError> {
    let model = calibrated_model(globals)?;
    let values = args.values.resolve()?;
    let table = load_table(args.table.as_deref())?;
    if args.depths == 0 {
        return Err(AppError::Usage("--depths must be at least 1".into()));
    }
    let override_delays = if args.delays.is_empty() {
        None
    } else if args.source == SourceKind::All {
        return Err(AppError::Usage(
            "--delays needs --source simulated or --source pool-model".into(),
        ));
    } else {
        Some(sorted_delays(&args.delays)?)
    };

    // Simulated family: the histogram and curve grids usually overlap, so
    // simulate the union of both and slice histograms out of it.
    let (histogram_delays, curve_delays) = match (args.source, &override_delays) {
        (SourceKind::Simulated, Some(delays)) => {
            let rounds = rounds_grid(delays).map_err(usage)?;
            (rounds.clone(), rounds)
        }
        _ => {
            let histogram = rounds_grid(&HISTOGRAM_DELAYS).expect("default grid is whole rounds");
            let curve = (1..=10).collect();
            (histogram, curve)
        }
    };
    let union: Vec<u32> = histogram_delays
        .iter()
        .chain(curve_delays.iter())
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let base = sim_config(
        globals,
        args.miners,
        args.rounds,
        args.trials,
        args.mine_prob,
        args.delay_model,
    )?;
    let histograms = simulate_delays(&base, &union).map_err(failure)?;
    let by_delay: BTreeMap<u32, usize> = union.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    let slice = |wanted: &[u32]| -> Vec<_> {
        wanted
            .iter()
            .map(|d| histograms[by_delay[d]].clone())
            .collect()
    };
    let histogram_set = slice(&histogram_delays);
    let curve_set = slice(&curve_delays);
    let sim_curves = estimate_all(&curve_set).map_err(failure)?;

    // Pool family.
    let pool_delays = match (args.source, &override_delays) {
        (SourceKind::PoolModel, Some(delays)) => delays.clone(),
        _ => POOL_DELAYS.to_vec(),
    };
    let pool_curve_set = pool_curves(&table, &pool_delays, globals.block_interval, args.depths)?;

    ensure_out_dir(&globals.out_dir)?;
    write_rows(
        &switch_histogram_rows(&histogram_set),
        &globals.out_dir,
        "switch_histogram.csv",
    )?;
    write_rows(
        &depth_value_rows(&values, &sim_curves, &model).map_err(failure)?,
        &globals.out_dir,
        "depth_value_simulated.csv",
    )?;
    write_rows(
        &revocation_rows(&pool_curve_set).map_err(failure)?,
        &globals.out_dir,
        "revocation_pool.csv",
    )?;
    write_rows(
        &depth_value_rows(&values, &pool_curve_set, &model).map_err(failure)?,
        &globals.out_dir,
        "depth_value_pool.csv",
    )?;
    Ok(())
}
