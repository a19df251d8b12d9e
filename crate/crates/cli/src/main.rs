//! `hashcount`: approximate and exact projected model counting.
//!
//! Exit codes: 0 success, 1 self-test failure or I/O error, 2 invalid
//! arguments or parameters, 3 unparsable input, 4 solver failure or
//! timeout.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use hashcount_bench::{run_bench, write_csv, BenchConfig};
use hashcount_core::oracle::SOLVER_ENV;
use hashcount_core::planner::{write_curves_csv, ClassicIterRule};
use hashcount_core::{
    count_exact, count_with, emit_error_curves, make_round_config, parse_dimacs, plan,
    CountError, CountMode, CountOptions, CountParams, ExternalSolver, Formula, OracleError,
    SolverBackend,
};
use serde::Serialize;

mod selftest;

const EXIT_FAILURE: u8 = 1;
const EXIT_PARAMS: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_SOLVER: u8 = 4;

#[derive(Parser)]
#[command(name = "hashcount", version, about = "Hashing-based approximate model counting")]
struct Cli {
    /// More logging (-v info, -vv debug, -vvv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Rounding,
    Classic,
}

impl From<ModeArg> for CountMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Rounding => CountMode::Rounding,
            ModeArg::Classic => CountMode::Classic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassicRuleArg {
    /// Exact binomial tail.
    Eta,
    /// `⌈17 log₂(3/δ)⌉`.
    ClosedForm,
}

#[derive(clap::Args)]
struct Tolerance {
    #[arg(long, default_value_t = 0.8)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.001)]
    delta: f64,
}

#[derive(clap::Args)]
struct SolverArg {
    /// External solver executable (DIMACS in, `s`/`v` lines out). Uses the
    /// built-in solver when absent.
    #[arg(long, env = SOLVER_ENV)]
    solver: Option<PathBuf>,
}

impl SolverArg {
    fn backend(&self) -> SolverBackend {
        match &self.solver {
            Some(p) if !p.as_os_str().is_empty() => SolverBackend::External(ExternalSolver::new(p)),
            _ => SolverBackend::BuiltIn,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the number of (projected) models.
    Count {
        #[arg(short, long)]
        input: PathBuf,
        #[command(flatten)]
        tol: Tolerance,
        #[arg(long, value_enum, default_value_t = ModeArg::Rounding)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = ClassicRuleArg::Eta)]
        classic_rule: ClassicRuleArg,
        /// Master seed; drawn from the clock and printed when absent.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        solver: SolverArg,
        /// Wall-clock limit in seconds.
        #[arg(long)]
        timeout: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Count models exactly by brute force (small scopes only).
    Exact {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Show constants and repetition counts for a tolerance.
    Plan {
        #[command(flatten)]
        tol: Tolerance,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Write failure-probability bounds of both modes as CSV.
    Curves {
        #[arg(long, default_value_t = 0.8)]
        epsilon: f64,
        /// Largest (odd) repetition count.
        #[arg(long, default_value_t = 201)]
        t_max: u64,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run both modes over a directory of `.cnf` files.
    Bench {
        #[arg(long)]
        dir: PathBuf,
        #[command(flatten)]
        tol: Tolerance,
        /// Per-run limit in seconds.
        #[arg(long, default_value_t = 60.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest scope for which exact counts are computed.
        #[arg(long, default_value_t = 20)]
        exact_limit: usize,
        #[command(flatten)]
        solver: SolverArg,
        /// Per-run CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check the built-in invariants.
    Selftest,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<CountError> for Failure {
    fn from(e: CountError) -> Self {
        let code = match e {
            CountError::Plan(_) => EXIT_PARAMS,
            CountError::Oracle(_) | CountError::RoundFailed { .. } => EXIT_SOLVER,
            _ => EXIT_FAILURE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(EXIT_FAILURE, e.to_string())
    }
}

fn load_formula(path: &Path) -> Result<Formula, Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot read {}: {e}", path.display())))?;
    parse_dimacs(&bytes).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn deadline(timeout: Option<f64>) -> Result<Option<Instant>, Failure> {
    match timeout {
        None => Ok(None),
        Some(s) if s.is_finite() && s >= 0.0 => Ok(Some(Instant::now() + Duration::from_secs_f64(s))),
        Some(s) => Err(Failure::new(EXIT_PARAMS, format!("invalid timeout {s}"))),
    }
}

fn print_json(value: &impl Serialize) -> Result<(), Failure> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
    println!("{s}");
    Ok(())
}

#[derive(Serialize)]
struct CountJson<'a> {
    mantissa: f64,
    exponent: u32,
    decimal: String,
    exact: bool,
    mode: CountMode,
    epsilon: f64,
    delta: f64,
    t: u64,
    rounds: usize,
    round_levels: &'a [u32],
    retries: u32,
    seed: u64,
}

#[allow(clippy::too_many_arguments)]
fn cmd_count(
    input: &Path,
    tol: &Tolerance,
    mode: CountMode,
    classic_rule: ClassicIterRule,
    seed: Option<u64>,
    backend: SolverBackend,
    timeout: Option<f64>,
    format: Format,
    verbose: bool,
) -> Result<(), Failure> {
    let formula = load_formula(input)?;
    let seed = seed.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0)
    });
    let opts = CountOptions {
        backend,
        deadline: deadline(timeout)?,
        classic_rule,
        ..CountOptions::default()
    };
    let params = CountParams::new(tol.epsilon, tol.delta, mode, seed);
    let r = count_with(&formula, &params, &opts).map_err(|e| match e {
        CountError::Oracle(OracleError::Timeout) => Failure::new(EXIT_SOLVER, "timed out"),
        e => e.into(),
    })?;
    let decimal = if r.exact {
        r.estimate.floor_biguint().to_string()
    } else {
        r.estimate.to_decimal_string(4)
    };
    if format == Format::Json {
        return print_json(&CountJson {
            mantissa: r.estimate.mantissa(),
            exponent: r.estimate.exponent(),
            decimal,
            exact: r.exact,
            mode: r.mode,
            epsilon: r.epsilon,
            delta: r.delta,
            t: r.t,
            rounds: r.rounds(),
            round_levels: &r.round_levels,
            retries: r.retries,
            seed: r.seed,
        });
    }
    println!("estimate: {}", r.estimate);
    println!("decimal: {decimal}");
    println!("exact: {}", r.exact);
    println!("mode: {}", r.mode);
    println!("t: {}", r.t);
    println!("rounds: {}", r.rounds());
    if verbose && !r.round_levels.is_empty() {
        let levels: Vec<String> = r.round_levels.iter().map(u32::to_string).collect();
        println!("levels: {}", levels.join(" "));
    }
    println!("seed: {}", r.seed);
    Ok(())
}

fn cmd_exact(input: &Path, format: Format) -> Result<(), Failure> {
    let formula = load_formula(input)?;
    let c = count_exact(&formula).map_err(|e| Failure::new(EXIT_PARAMS, e.to_string()))?;
    if format == Format::Json {
        return print_json(&serde_json::json!({ "count": c.0.to_string() }));
    }
    println!("{c}");
    Ok(())
}

#[derive(Serialize)]
struct PlanJson {
    epsilon: f64,
    delta: f64,
    thresh: u64,
    pivot: f64,
    round_up: bool,
    round_value: f64,
    t_rounding: u64,
    t_classic: u64,
}

fn cmd_plan(tol: &Tolerance, format: Format) -> Result<(), Failure> {
    let params = |e: hashcount_core::PlanError| Failure::new(EXIT_PARAMS, e.to_string());
    let cfg = make_round_config(tol.epsilon).map_err(params)?;
    let rounding = plan(tol.epsilon, tol.delta, CountMode::Rounding, ClassicIterRule::Eta).map_err(params)?;
    let classic = plan(tol.epsilon, tol.delta, CountMode::Classic, ClassicIterRule::Eta).map_err(params)?;
    let out = PlanJson {
        epsilon: tol.epsilon,
        delta: tol.delta,
        thresh: cfg.thresh,
        pivot: cfg.pivot,
        round_up: cfg.round_up,
        round_value: cfg.round_value,
        t_rounding: rounding.t,
        t_classic: classic.t,
    };
    if format == Format::Json {
        return print_json(&out);
    }
    println!("epsilon={} delta={}", out.epsilon, out.delta);
    println!("thresh={} pivot={:.3}", out.thresh, out.pivot);
    println!("roundUp={} roundValue={:.3}", out.round_up as u8, out.round_value);
    println!("t(rounding)={} t(classic)={}", out.t_rounding, out.t_classic);
    Ok(())
}

fn cmd_curves(epsilon: f64, t_max: u64, output: Option<&Path>) -> Result<(), Failure> {
    let rows = emit_error_curves(epsilon, t_max).map_err(|e| Failure::new(EXIT_PARAMS, e.to_string()))?;
    match output {
        Some(path) => write_curves_csv(&rows, io::BufWriter::new(fs::File::create(path)?))?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_curves_csv(&rows, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Count {
            input,
            tol,
            mode,
            classic_rule,
            seed,
            solver,
            timeout,
            format,
        } => {
            let rule = match classic_rule {
                ClassicRuleArg::Eta => ClassicIterRule::Eta,
                ClassicRuleArg::ClosedForm => ClassicIterRule::ClosedForm,
            };
            cmd_count(
                &input,
                &tol,
                mode.into(),
                rule,
                seed,
                solver.backend(),
                timeout,
                format,
                cli.verbose > 0,
            )
        }
        Command::Exact { input, format } => cmd_exact(&input, format),
        Command::Plan { tol, format } => cmd_plan(&tol, format),
        Command::Curves {
            epsilon,
            t_max,
            output,
        } => cmd_curves(epsilon, t_max, output.as_deref()),
        Command::Bench {
            dir,
            tol,
            time_limit,
            workers,
            seed,
            exact_limit,
            solver,
            csv,
            format,
        } => cmd_bench(
            BenchConfig {
                dir,
                epsilon: tol.epsilon,
                delta: tol.delta,
                time_limit: Duration::from_secs_f64(time_limit.max(0.0)),
                workers,
                seed,
                backend: solver.backend(),
                exact_limit,
            },
            csv.as_deref(),
            format,
        ),
        Command::Selftest => {
            if selftest::run() {
                Ok(())
            } else {
                Err(Failure::new(EXIT_FAILURE, "self-test failed"))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_bench(config: BenchConfig, csv: Option<&Path>, format: Format) -> Result<(), Failure> {
    let out = run_bench(&config).map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
    if let Some(path) = csv {
        let file = fs::File::create(path)?;
        write_csv(&out.records, file).map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
    }
    if format == Format::Json {
        return print_json(&out.report);
    }
    print!("{}", out.report);
    Ok(())
}
