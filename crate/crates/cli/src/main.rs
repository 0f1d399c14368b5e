//! `pcx`: priority weights, inconsistency and convexity analysis for
//! pairwise comparison matrices.
//!
//! Exit codes: 0 success, 1 input or configuration error, 2 numerical
//! non-convergence.

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcx_core::Method;

#[derive(Debug, Parser)]
#[command(name = "pcx", version, about = "Pairwise comparison toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Priority weights by one or all methods.
    Solve(SolveArgs),
    /// Triad inconsistency: global value, worst triad, acceptability.
    Inconsistency(InconsistencyArgs),
    /// Convexity certificate for the least-squares objective.
    Analyze(AnalyzeArgs),
    /// Monte-Carlo scale experiment; writes per-trial CSV and summary JSON.
    Simulate(SimulateArgs),
    /// Cross-checks the least-squares solver against a grid search (n <= 4).
    Verify(VerifyArgs),
    /// Runs the HTTP elicitation service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Lsm,
    Wlsm,
    Llsm,
    Evm,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            Self::Lsm => vec![Method::Lsm],
            Self::Wlsm => vec![Method::Wlsm],
            Self::Llsm => vec![Method::Llsm],
            Self::Evm => vec![Method::Evm],
            Self::All => Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
struct SolverFlags {
    /// Projected-gradient tolerance for the least-squares solver.
    #[arg(long, default_value_t = 1e-10)]
    grad_tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Random starts (default: 1 if certified, 20 otherwise).
    #[arg(long)]
    starts: Option<usize>,
    /// Seed of the start points.
    #[arg(long, env = "PCX_SEED", default_value_t = 0)]
    seed: u64,
    /// Log-space distance separating two distinct minima.
    #[arg(long, default_value_t = 1e-4)]
    distinct_tol: f64,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Matrix file (CSV or JSON).
    input: PathBuf,
    #[arg(long, value_enum, default_value = "lsm")]
    method: MethodArg,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Debug, Args)]
struct InconsistencyArgs {
    input: PathBuf,
    /// List every triad, not only the worst.
    #[arg(long)]
    all_triads: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Matrix file; not needed with --curves.
    #[arg(required_unless_present = "curves", conflicts_with = "curves")]
    input: Option<PathBuf>,
    /// Print the CSV table w,phi,psi of the convexity boundary instead.
    #[arg(long)]
    curves: bool,
    #[arg(long, default_value_t = 0.01, requires = "curves")]
    w_min: f64,
    #[arg(long, default_value_t = 100.0, requires = "curves")]
    w_max: f64,
    #[arg(long, default_value_t = 401, requires = "curves")]
    points: usize,
    #[arg(long, conflicts_with = "curves")]
    json: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON file with any of: scale, n, trials, seed, delta, snap, starts.
    /// Flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scale: 1-3, 1-3-half, 1-5 or 1-9.
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = "PCX_SEED")]
    seed: Option<u64>,
    /// Half-width of the log-space perturbation.
    #[arg(long)]
    delta: Option<f64>,
    /// Snap perturbed entries back onto the scale.
    #[arg(long)]
    snap: Option<bool>,
    /// Least-squares starts per trial.
    #[arg(long)]
    starts: Option<usize>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "pcx-trials.csv")]
    csv_out: PathBuf,
    #[arg(long, default_value = "pcx-summary.json")]
    json_out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    input: PathBuf,
    /// Grid points per axis (odd; default 601, or 201 for n = 4).
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    /// Directory holding one JSON file per session.
    #[arg(long, default_value = "pcx-sessions", conflicts_with = "in_memory")]
    data_dir: PathBuf,
    /// Keep sessions in memory only.
    #[arg(long)]
    in_memory: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; --help and --version succeed
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Inconsistency(a) => commands::inconsistency(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Verify(a) => commands::verify(a),
        Command::Serve(a) => commands::serve(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
