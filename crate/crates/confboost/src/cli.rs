//! Batch command-line interface: synthetic data generation, end-to-end
//! multi-seed runs, and interval audits.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or config
//! errors (clap reports its own parse failures with 2 as well).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, ResponseColumn};
use crate::eval_report::{self, EvalReport};
use crate::pipeline::{
    self, boosted_conformal, BoostConfig, Family, Objective, STREAM_TEST_HOLDOUT,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(err: impl std::fmt::Display) -> CliError {
        CliError::Usage(err.to_string())
    }

    fn runtime(err: impl std::fmt::Display) -> CliError {
        CliError::Runtime(err.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "confboost",
    version,
    about = "Boosted conformal prediction intervals: synthesize data, run the procedure, audit intervals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic heteroskedastic regression dataset as CSV.
    Synth(SynthArgs),
    /// Run the full procedure over one or more seeds and write reports.
    Run(RunArgs),
    /// Audit externally supplied prediction intervals against a dataset.
    Audit(AuditArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Number of rows.
    #[arg(long)]
    pub n: usize,
    /// Number of feature columns.
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Local,
    Cqr,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Length,
    Condcov,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Response column name, or "last".
    #[arg(long, default_value = "last")]
    pub response: String,
    /// Seeds: a single value "7", a list "1,2,5", or a range "1..10".
    #[arg(long, default_value = "1")]
    pub seeds: String,
    /// Output directory for per-seed reports and the aggregate.
    #[arg(long)]
    pub out: PathBuf,
    /// Also emit per-seed CV-curve and leaf-table CSVs.
    #[arg(long)]
    pub csv: bool,

    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
    /// Maximum boosting rounds T.
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Cross-validation folds.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    /// Dataset CSV (features + response).
    #[arg(long)]
    pub data: PathBuf,
    /// Response column name, or "last".
    #[arg(long, default_value = "last")]
    pub response: String,
    /// Intervals CSV with columns "lower" and "upper", row-aligned with the
    /// dataset.
    #[arg(long)]
    pub intervals: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 8)]
    pub max_leaves: usize,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Per-seed run record: the baseline and boosted evaluations on the held-out
/// test rows, plus run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    /// Response standardization scale (1.0 when standardization is off).
    pub response_scale: f64,
    pub selected_rounds: usize,
    pub cv_tree_adjusted: bool,
    pub baseline: EvalReport,
    pub boosted: EvalReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    pub q10: f64,
    pub q90: f64,
}

/// Mean and empirical 10%/90% quantiles across seeds.
fn summarize(values: &[f64]) -> SummaryStat {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let at = |q: f64| sorted[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
    SummaryStat {
        mean: values.iter().sum::<f64>() / n as f64,
        q10: at(0.1),
        q90: at(0.9),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub seeds: Vec<u64>,
    pub baseline_marginal_coverage: SummaryStat,
    pub boosted_marginal_coverage: SummaryStat,
    pub baseline_avg_length: SummaryStat,
    pub boosted_avg_length: SummaryStat,
    pub baseline_max_cond_deviation: SummaryStat,
    pub boosted_max_cond_deviation: SummaryStat,
    /// Signed relative change of the objective metric; absent when any
    /// baseline value is nonpositive.
    pub improvement: Option<SummaryStat>,
}

pub fn aggregate_records(records: &[RunRecord]) -> Aggregate {
    let pick = |f: fn(&RunRecord) -> f64| -> Vec<f64> { records.iter().map(f).collect() };
    let improvements: Vec<f64> = records
        .iter()
        .filter_map(|r| r.boosted.improvement_vs_baseline)
        .collect();
    Aggregate {
        seeds: records.iter().map(|r| r.seed).collect(),
        baseline_marginal_coverage: summarize(&pick(|r| r.baseline.marginal_coverage)),
        boosted_marginal_coverage: summarize(&pick(|r| r.boosted.marginal_coverage)),
        baseline_avg_length: summarize(&pick(|r| r.baseline.avg_length)),
        boosted_avg_length: summarize(&pick(|r| r.boosted.avg_length)),
        baseline_max_cond_deviation: summarize(&pick(|r| r.baseline.max_cond_deviation)),
        boosted_max_cond_deviation: summarize(&pick(|r| r.boosted.max_cond_deviation)),
        improvement: if improvements.len() == records.len() {
            Some(summarize(&improvements))
        } else {
            None
        },
    }
}

/// Parse "7", "1,2,5", or "1..10" (inclusive on both ends).
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>, CliError> {
    let spec = spec.trim();
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| {
            CliError::Usage(format!("bad seed range start '{lo}'"))
        })?;
        let hi: u64 = hi.trim().parse().map_err(|_| {
            CliError::Usage(format!("bad seed range end '{hi}'"))
        })?;
        if hi < lo {
            return Err(CliError::Usage(format!("empty seed range {lo}..{hi}")));
        }
        return Ok((lo..=hi).collect());
    }
    let seeds: Result<Vec<u64>, _> = spec.split(',').map(|s| s.trim().parse::<u64>()).collect();
    let seeds = seeds.map_err(|_| CliError::Usage(format!("bad seeds spec '{spec}'")))?;
    if seeds.is_empty() {
        return Err(CliError::Usage("empty seeds spec".into()));
    }
    Ok(seeds)
}

fn response_column(name: &str) -> ResponseColumn {
    if name == "last" {
        ResponseColumn::Last
    } else {
        ResponseColumn::Named(name.to_string())
    }
}

/// One complete seed run: hold out the test fraction, optionally
/// standardize, fit + calibrate on the rest, evaluate baseline and boosted
/// intervals on the test rows.
pub fn run_seed(ds: &Dataset, cfg: &BoostConfig, seed: u64) -> Result<RunRecord, String> {
    let mut cfg = cfg.clone();
    cfg.seed = seed;

    let holdout = data::split(
        ds.n_rows(),
        1.0 - cfg.test_fraction,
        pipeline::derive_seed(seed, STREAM_TEST_HOLDOUT),
    )
    .map_err(|e| e.to_string())?;
    let rest_rows = &holdout.train;
    let test_rows = &holdout.calib;

    let (scaled, scale) = if cfg.standardize {
        data::standardize_response(ds, rest_rows).map_err(|e| e.to_string())?
    } else {
        (ds.clone(), 1.0)
    };
    let rest = scaled.select_rows(rest_rows);
    let test = scaled.select_rows(test_rows);

    let outcome = boosted_conformal(&rest, &cfg).map_err(|e| e.to_string())?;
    let baseline = eval_report::evaluate(
        &test,
        &outcome.fitted.baseline,
        &outcome.baseline_quantile,
        &cfg,
        seed,
    )
    .map_err(|e| e.to_string())?;
    let mut boosted = eval_report::evaluate(
        &test,
        &outcome.fitted.ensemble,
        &outcome.boosted_quantile,
        &cfg,
        seed,
    )
    .map_err(|e| e.to_string())?;

    let (base_metric, boost_metric) = match cfg.objective {
        Objective::Length => (baseline.avg_length, boosted.avg_length),
        Objective::Condcov => (baseline.max_cond_deviation, boosted.max_cond_deviation),
    };
    if base_metric > 0.0 {
        boosted.improvement_vs_baseline = Some((boost_metric - base_metric) / base_metric);
    }

    Ok(RunRecord {
        seed,
        response_scale: scale,
        selected_rounds: outcome.fitted.selected_rounds,
        cv_tree_adjusted: outcome.fitted.cv_tree_adjusted,
        baseline,
        boosted,
    })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::runtime)?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("failed to write {}: {e}", path.display())))
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    if args.n == 0 || args.p == 0 {
        return Err(CliError::Usage(format!(
            "--n and --p must be positive (got n={}, p={})",
            args.n, args.p
        )));
    }
    let ds = data::synth_heteroskedastic(args.n, args.p, args.seed).map_err(CliError::usage)?;
    data::save_csv(&ds, &args.out).map_err(CliError::runtime)?;
    println!(
        "wrote {} rows x {} features to {}",
        args.n,
        args.p,
        args.out.display()
    );
    println!(
        "generator: x ~ U[0,1]^{}, y = {}*x1 + ({} + x1)*eps, eps ~ N(0,1), seed {}",
        args.p,
        data::SYNTH_MEAN_SLOPE,
        data::SYNTH_SD_OFFSET,
        args.seed
    );
    Ok(())
}

fn load_run_config(args: &RunArgs) -> Result<BoostConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str::<BoostConfig>(&text).map_err(|e| {
                CliError::Usage(format!("invalid config {}: {e}", path.display()))
            })?
        }
        None => BoostConfig::default(),
    };
    if let Some(alpha) = args.alpha {
        cfg.alpha = alpha;
    }
    if let Some(family) = args.family {
        cfg.family = match family {
            FamilyArg::Local => Family::Local,
            FamilyArg::Cqr => Family::Cqr,
        };
    }
    if let Some(objective) = args.objective {
        cfg.objective = match objective {
            ObjectiveArg::Length => Objective::Length,
            ObjectiveArg::Condcov => Objective::Condcov,
        };
    }
    if let Some(rounds) = args.rounds {
        cfg.rounds = rounds;
    }
    if let Some(gamma) = args.gamma {
        cfg.gamma = gamma;
    }
    if let Some(lr) = args.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    cfg.validate().map_err(CliError::usage)?;
    Ok(cfg)
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load_run_config(args)?;
    let seeds = parse_seeds(&args.seeds)?;
    let ds = data::load_csv(&args.data, &response_column(&args.response))
        .map_err(CliError::usage)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", args.out.display())))?;

    // Seeds are independent; reports are written per seed and the aggregate
    // is assembled in seed order.
    let results: Vec<Result<RunRecord, String>> = seeds
        .par_iter()
        .map(|&seed| run_seed(&ds, &cfg, seed))
        .collect();
    let mut records = Vec::with_capacity(seeds.len());
    for (seed, result) in seeds.iter().zip(results) {
        records.push(result.map_err(|e| CliError::Runtime(format!("seed {seed}: {e}")))?);
    }

    for record in &records {
        let path = args.out.join(format!("seed_{}.json", record.seed));
        write_json(record, &path)?;
    }
    if args.csv {
        for (record, &seed) in records.iter().zip(&seeds) {
            let rerun = boosted_conformal(
                &prepare_rest(&ds, &cfg, seed).map_err(CliError::runtime)?,
                &with_seed(&cfg, seed),
            )
            .map_err(CliError::runtime)?;
            eval_report::write_cv_curve_csv(
                &rerun.fitted.cv_curve,
                args.out.join(format!("seed_{seed}_cv.csv")),
            )
            .map_err(CliError::runtime)?;
            eval_report::write_leaf_table_csv(
                &record.boosted.leaf_table,
                args.out.join(format!("seed_{seed}_leaves.csv")),
            )
            .map_err(CliError::runtime)?;
        }
    }

    let aggregate = aggregate_records(&records);
    write_json(&aggregate, &args.out.join("aggregate.json"))?;
    println!(
        "wrote {} seed report(s) and aggregate.json to {}",
        records.len(),
        args.out.display()
    );
    Ok(())
}

fn with_seed(cfg: &BoostConfig, seed: u64) -> BoostConfig {
    let mut cfg = cfg.clone();
    cfg.seed = seed;
    cfg
}

fn prepare_rest(ds: &Dataset, cfg: &BoostConfig, seed: u64) -> Result<Dataset, String> {
    let holdout = data::split(
        ds.n_rows(),
        1.0 - cfg.test_fraction,
        pipeline::derive_seed(seed, STREAM_TEST_HOLDOUT),
    )
    .map_err(|e| e.to_string())?;
    let (scaled, _) = if cfg.standardize {
        data::standardize_response(ds, &holdout.train).map_err(|e| e.to_string())?
    } else {
        (ds.clone(), 1.0)
    };
    Ok(scaled.select_rows(&holdout.train))
}

/// Load an intervals CSV with "lower" and "upper" columns.
fn load_intervals(path: &Path) -> Result<Vec<crate::conformal::Interval>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::Usage(format!("{} is empty", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let lower_idx = cols.iter().position(|&c| c == "lower").ok_or_else(|| {
        CliError::Usage(format!("{} has no 'lower' column", path.display()))
    })?;
    let upper_idx = cols.iter().position(|&c| c == "upper").ok_or_else(|| {
        CliError::Usage(format!("{} has no 'upper' column", path.display()))
    })?;
    let mut intervals = Vec::new();
    for (row_no, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != cols.len() {
            return Err(CliError::Usage(format!(
                "{} row {}: {} fields, expected {}",
                path.display(),
                row_no + 1,
                cells.len(),
                cols.len()
            )));
        }
        let parse = |idx: usize| -> Result<f64, CliError> {
            cells[idx].parse().map_err(|_| {
                CliError::Usage(format!(
                    "{} row {}: cannot parse '{}'",
                    path.display(),
                    row_no + 1,
                    cells[idx]
                ))
            })
        };
        let lower = parse(lower_idx)?;
        let upper = parse(upper_idx)?;
        if lower > upper {
            return Err(CliError::Usage(format!(
                "{} row {}: lower {lower} > upper {upper}",
                path.display(),
                row_no + 1
            )));
        }
        intervals.push(crate::conformal::Interval { lower, upper });
    }
    Ok(intervals)
}

fn cmd_audit(args: &AuditArgs) -> Result<(), CliError> {
    let ds = data::load_csv(&args.data, &response_column(&args.response))
        .map_err(CliError::usage)?;
    let intervals = load_intervals(&args.intervals)?;
    if intervals.len() != ds.n_rows() {
        return Err(CliError::Usage(format!(
            "row count mismatch: {} intervals vs {} data rows",
            intervals.len(),
            ds.n_rows()
        )));
    }
    let cfg = BoostConfig {
        alpha: args.alpha,
        max_leaves: args.max_leaves,
        min_leaf: args.min_leaf,
        ..BoostConfig::default()
    };
    cfg.validate().map_err(CliError::usage)?;
    let report =
        eval_report::evaluate_intervals(&ds, &intervals, &cfg, 0).map_err(CliError::runtime)?;
    let mut text = serde_json::to_string_pretty(&report).map_err(CliError::runtime)?;
    text.push('\n');
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("failed to write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Run(args) => cmd_run(args),
        Command::Audit(args) => cmd_audit(args),
    }
}

/// Binary entry point; maps error classes to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
