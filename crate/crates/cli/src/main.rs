use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use imc_hit::credal::ExtremeSelection;
use imc_hit::experiments::{
    fixture, gen_random_instance, lambda_peak_scan, propagation_chain_instance, run_batch,
    worst_case_instance, write_aggregate_csv, write_histogram_csv, write_peak_csv, write_runs_csv,
    BatchConfig, RandomParams,
};
use imc_hit::imprecise::{
    lower_hitting, lower_hitting_from, upper_hitting, upper_hitting_from, SolveOptions, SolveResult,
};
use imc_hit::instance::{CredalModel, Family, InstanceSpec};
use imc_hit::oracle::{brute_force_bounds, simulate_hitting, McConfig, DEFAULT_COMBO_LIMIT};
use imc_hit::precise::hitting_probabilities;
use imc_hit::reachability::{
    default_n_cap, lower_reach_report, lr2_minimal_n, lr3_holds, upper_reach_report, Mode,
};
use imc_hit::Error;

const THREADS_ENV: &str = "IMC_HIT_THREADS";

/// Lower and upper hitting probabilities for imprecise Markov chains.
#[derive(Parser)]
#[command(name = "imc-hit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Lower hitting probabilities.
    SolveLower(SolveArgs),
    /// Upper hitting probabilities.
    SolveUpper(SolveArgs),
    /// Reachability analysis.
    Reach(ReachArgs),
    /// Cross-check the solvers against enumeration and simulation.
    Oracle(OracleArgs),
    /// Batch iteration-count study over random instances.
    Experiment(ExperimentArgs),
    /// Print a named fixture instance.
    Fixtures(FixtureArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Random,
    WorstCase,
    PropagationChain,
    Example1,
    Example2,
    Tiebreak,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    #[value(alias = "eps_contam")]
    Eps,
    #[value(alias = "eps_full")]
    EpsFull,
    #[value(alias = "vertex_hull", alias = "hull")]
    Vertex,
}

impl From<ModelArg> for CredalModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Eps => CredalModel::EpsContam,
            ModelArg::EpsFull => CredalModel::EpsFull,
            ModelArg::Vertex => CredalModel::VertexHull,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lower,
    Upper,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// State count (random instances) or chain length (propagation chain).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum, default_value = "eps")]
    model: ModelArg,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of extreme points for the worst-case family.
    #[arg(long)]
    m: Option<usize>,
    /// Upper interval bound for the propagation chain.
    #[arg(long, default_value_t = 0.95)]
    b: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveFlags {
    /// Residual tolerance of the returned vector.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Iteration cap (default 10 N + 100).
    #[arg(long)]
    max_iters: Option<usize>,
    /// Record every intermediate hitting vector.
    #[arg(long)]
    trace: bool,
}

impl SolveFlags {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            residual_tol: self.tol,
            max_iterations: self.max_iters,
            record_trace: self.trace,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[command(flatten)]
    flags: SolveFlags,
    /// Starting extreme-point selection, one index per state (comma separated).
    #[arg(long, value_delimiter = ',')]
    start: Option<Vec<usize>>,
}

#[derive(Args)]
struct ReachArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "lower")]
    mode: ModeArg,
    /// Also test the bounded-horizon and support-dynamics criteria from this state.
    #[arg(long)]
    state: Option<usize>,
    /// Horizon cap for the bounded-horizon search (default 4 N²).
    #[arg(long)]
    n_cap: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_COMBO_LIMIT)]
    combo_limit: u128,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    #[command(flatten)]
    flags: SolveFlags,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Simulation horizon (default 50 N).
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_COMBO_LIMIT)]
    combo_limit: u128,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    n: usize,
    /// Grid of average degrees: `a..b` (integer steps), `a..b:step`, or a comma list.
    #[arg(long, value_parser = parse_grid)]
    lambda: Grid,
    #[arg(long, value_enum, default_value = "eps")]
    model: ModelArg,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-run CSV; aggregate, histogram and peak files are written next to it.
    #[arg(long)]
    out: PathBuf,
    /// State counts for a peak scan over the same grid (comma separated).
    #[arg(long, value_delimiter = ',')]
    peak_n: Option<Vec<usize>>,
}

#[derive(Args)]
struct FixtureArgs {
    #[arg(long)]
    name: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let bad = |_| format!("invalid grid '{s}'");
    if let Some((lo, rest)) = s.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (hi, step.parse::<f64>().map_err(bad)?),
            None => (rest, 1.0),
        };
        let (lo, hi) = (
            lo.parse::<f64>().map_err(bad)?,
            hi.parse::<f64>().map_err(bad)?,
        );
        if !(step > 0.0) || hi < lo {
            return Err(format!("invalid grid '{s}'"));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok(Grid((0..=count).map(|i| lo + i as f64 * step).collect()));
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(bad))
        .collect::<Result<Vec<_>, _>>()
        .map(Grid)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Error::Domain(format!(
            "{THREADS_ENV} must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Diagnostics(format!("cannot configure thread pool: {e}")))
}

fn emit(value: &impl Serialize, out: Option<&Path>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)?;
    let line = match out {
        Some(path) => {
            std::fs::write(path, text + "\n")?;
            json!({ "written": path }).to_string()
        }
        None => text,
    };
    // A closed pipe (e.g. `| head`) is not an error.
    match writeln!(std::io::stdout(), "{line}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn gen(args: &GenArgs) -> Result<InstanceSpec, Error> {
    let need_n = || {
        args.n
            .ok_or_else(|| Error::Domain("--n is required for this family".into()))
    };
    match args.family {
        FamilyArg::Random => {
            let n = need_n()?;
            let params = RandomParams {
                n,
                lambda: args.lambda.unwrap_or(2.0),
                model: args.model.into(),
                epsilon: args.epsilon,
            };
            gen_random_instance(&params, args.seed)
        }
        FamilyArg::WorstCase => worst_case_instance(
            args.m
                .ok_or_else(|| Error::Domain("--m is required for worst_case".into()))?,
        ),
        FamilyArg::PropagationChain => propagation_chain_instance(need_n()?, args.b),
        FamilyArg::Example1 => fixture("example1"),
        FamilyArg::Example2 => fixture("example2"),
        FamilyArg::Tiebreak => fixture("tiebreak"),
    }
}

fn solve(args: &SolveArgs, mode: Mode) -> Result<SolveResult, Error> {
    let spec = InstanceSpec::load(&args.instance)?;
    let target = spec.target_set()?;
    let opts = args.flags.options();
    match (&args.start, mode) {
        (None, Mode::Lower) => lower_hitting(&spec.credal, &target, &opts),
        (None, Mode::Upper) => upper_hitting(&spec.credal, &target, &opts),
        (Some(start), Mode::Lower) => lower_hitting_from(
            &spec.credal,
            &target,
            &ExtremeSelection::new(start.clone()),
            &opts,
        ),
        (Some(start), Mode::Upper) => upper_hitting_from(
            &spec.credal,
            &target,
            &ExtremeSelection::new(start.clone()),
            &opts,
        ),
    }
}

fn reach(args: &ReachArgs) -> Result<Value, Error> {
    let spec = InstanceSpec::load(&args.instance)?;
    let target = spec.target_set()?;
    let report = match args.mode {
        ModeArg::Lower => lower_reach_report(&spec.credal, &target)?,
        ModeArg::Upper => upper_reach_report(&spec.credal, &target)?,
    };
    let mut value = serde_json::to_value(&report)?;
    if let Some(x) = args.state {
        let d = target.set();
        let cap = args.n_cap.unwrap_or_else(|| default_n_cap(spec.states));
        value["state"] = json!({
            "state": x,
            "in_fixpoint": report.fixpoint().contains(x),
            "lr3": lr3_holds(&spec.credal, d, x)?,
            "lr2_minimal_n": lr2_minimal_n(&spec.credal, d, x, cap, args.combo_limit)?,
            "n_cap": cap,
        });
    }
    Ok(value)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn oracle(args: &OracleArgs) -> Result<Value, Error> {
    let spec = InstanceSpec::load(&args.instance)?;
    let target = spec.target_set()?;
    let opts = args.flags.options();
    let lower = lower_hitting(&spec.credal, &target, &opts)?;
    let upper = upper_hitting(&spec.credal, &target, &opts)?;

    let brute = match brute_force_bounds(&spec.credal, &target, args.combo_limit) {
        Ok((lo, hi)) => json!({
            "lower": lo.values(),
            "upper": hi.values(),
            "max_abs_diff_lower": max_abs_diff(lo.values(), lower.probabilities.values()),
            "max_abs_diff_upper": max_abs_diff(hi.values(), upper.probabilities.values()),
        }),
        Err(e @ Error::Capacity { .. }) => json!({ "skipped": e.to_string() }),
        Err(e) => return Err(e),
    };

    let cfg = McConfig {
        trials: args.trials,
        horizon: args.horizon.unwrap_or(50 * spec.states),
        seed: args.seed,
    };
    let mut simulation = serde_json::Map::new();
    for result in [&lower, &upper] {
        let exact = hitting_probabilities(&result.witness, &target)?;
        let rows = (0..spec.states)
            .map(|x| {
                let est = simulate_hitting(&result.witness, &target, x, &cfg)?;
                let gap = (est.estimate - exact.get(x)).abs();
                Ok(json!({
                    "state": x,
                    "exact": exact.get(x),
                    "estimate": est.estimate,
                    "stderr": est.stderr,
                    "survival": est.survival,
                    "consistent": gap <= 3.0 * est.stderr + est.survival + 1e-12,
                }))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let key = match result.mode {
            Mode::Lower => "lower_witness",
            Mode::Upper => "upper_witness",
        };
        simulation.insert(key.into(), Value::Array(rows));
    }

    Ok(json!({
        "lower": lower,
        "upper": upper,
        "brute_force": brute,
        "monte_carlo": { "config": cfg, "states": simulation },
    }))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn experiment(args: &ExperimentArgs) -> Result<Value, Error> {
    let model: CredalModel = args.model.into();
    let stats = run_batch(&BatchConfig {
        n: args.n,
        lambdas: args.lambda.0.clone(),
        model,
        runs_per_cell: args.runs,
        epsilon: args.epsilon,
        seed: args.seed,
    })?;
    let lower_path = sibling(&args.out, "lower");
    let upper_path = sibling(&args.out, "upper");
    let hist_path = sibling(&args.out, "histogram");
    write_runs_csv(&args.out, &stats)?;
    write_aggregate_csv(&lower_path, &stats, Mode::Lower)?;
    write_aggregate_csv(&upper_path, &stats, Mode::Upper)?;
    write_histogram_csv(&hist_path, &stats)?;

    let mut files = vec![args.out.clone(), lower_path, upper_path, hist_path];
    let mut peak = Value::Null;
    if let Some(n_grid) = &args.peak_n {
        let rows = lambda_peak_scan(
            n_grid,
            &args.lambda.0,
            model,
            args.runs,
            args.epsilon,
            args.seed,
        )?;
        let path = sibling(&args.out, "peak");
        write_peak_csv(&path, &rows)?;
        files.push(path);
        peak = serde_json::to_value(&rows)?;
    }

    let cells: Vec<Value> = stats
        .iter()
        .map(|s| {
            json!({
                "lambda": s.lambda,
                "runs": s.runs,
                "mean_iters_lower": s.mean_iters_lower,
                "mean_iters_upper": s.mean_iters_upper,
                "std_lower": s.std_lower,
                "std_upper": s.std_upper,
                "max_iters": s.max_iters,
            })
        })
        .collect();
    Ok(json!({
        "n": args.n,
        "model": model,
        "epsilon": model.uses_epsilon().then_some(args.epsilon),
        "seed": args.seed,
        "cells": cells,
        "peak": peak,
        "files": files,
    }))
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    match cli.command {
        Command::Gen(args) => emit(&gen(&args)?, args.out.as_deref()),
        Command::SolveLower(args) => emit(&solve(&args, Mode::Lower)?, None),
        Command::SolveUpper(args) => emit(&solve(&args, Mode::Upper)?, None),
        Command::Reach(args) => emit(&reach(&args)?, None),
        Command::Oracle(args) => emit(&oracle(&args)?, None),
        Command::Experiment(args) => emit(&experiment(&args)?, None),
        Command::Fixtures(args) => {
            let family: Family = args.name.parse()?;
            if matches!(
                family,
                Family::Random | Family::WorstCase | Family::PropagationChain
            ) {
                return Err(Error::Domain(format!("'{}' is not a fixture", args.name)));
            }
            emit(&fixture(&args.name)?, args.out.as_deref())
        }
    }
}

fn error_json(kind: &str, message: &str, detail: Value) -> String {
    let mut v = json!({ "error": kind, "message": message });
    if !detail.is_null() {
        v["detail"] = detail;
    }
    v.to_string()
}

fn error_detail(e: &Error) -> Value {
    match e {
        Error::NonConvergence {
            iterations,
            residual,
            trace,
        } => {
            json!({ "iterations": iterations, "residual": residual, "trace": trace })
        }
        Error::Sandwich {
            state,
            sample,
            value,
            lower,
            upper,
            matrix,
        } => json!({
            "state": state, "sample": sample, "value": value,
            "lower": lower, "upper": upper, "matrix": matrix,
        }),
        _ => Value::Null,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_json("usage", e.to_string().trim(), Value::Null));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string(), error_detail(&e)));
            ExitCode::FAILURE
        }
    }
}
