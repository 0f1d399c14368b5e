use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use pcx_core::convexity::{certify, root_curves, ConvexityConstants};
use pcx_core::oracle::{grid_min_lsm, GridSpec, MAX_GRID_N};
use pcx_core::scales::{run_monte_carlo, scale_by_name, MonteCarloConfig, MonteCarloReport};
use pcx_core::solvers::{self, solve_lsm, LogPoint};
use pcx_core::{Error as CoreError, Method, PCMatrix, SolveOptions, SolveResult, Verdict};
use pcx_service::SessionStore;
use serde::Deserialize;
use thiserror::Error;

use crate::input::read_matrix;
use crate::output::{names, num, weights_line, MethodFailure, SolveOutput, VerifyOutput};
use crate::{
    AnalyzeArgs, InconsistencyArgs, ServeArgs, SimulateArgs, SolveArgs, SolverFlags, VerifyArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Input(_) => 1,
            Self::NotConverged(_) => 2,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NotConverged { .. } => Self::NotConverged(e.to_string()),
            other => Self::Input(other.to_string()),
        }
    }
}

type Outcome = Result<(), CliError>;

/// Verify agreement tolerance on objective (relative) and log-weights.
const VERIFY_TOL: f64 = 1e-3;

fn load(path: &Path) -> Result<PCMatrix, CliError> {
    read_matrix(path).map_err(CliError::Input)
}

fn solve_options(f: &SolverFlags) -> Result<SolveOptions, CliError> {
    let opts = SolveOptions {
        grad_tol: f.grad_tol,
        max_iters: f.max_iters,
        starts: f.starts,
        start_seed: f.seed,
        distinct_tol: f.distinct_tol,
    };
    opts.validate()?;
    Ok(opts)
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Input(e.to_string()))
}

fn print_result(names: &[String], r: &SolveResult) {
    println!("{}", r.method);
    println!(
        "  weights (sum 1):      {}",
        weights_line(names, &r.weights)
    );
    println!(
        "  weights (product 1):  {}",
        weights_line(names, &r.weights_product)
    );
    println!("  least-squares distance: {:.10e}", r.objective);
    if let Some(m) = r.method_objective {
        println!("  method objective:       {m:.10e}");
    }
    if let Some(l) = r.eigenvalue {
        println!("  eigenvalue:             {l:.10}");
    }
    println!(
        "  iterations: {} ({})",
        r.iterations,
        if r.converged {
            "converged"
        } else {
            "NOT converged"
        }
    );
    if r.method == Method::Lsm {
        let line = match &r.census {
            None => "unique (certified; single start)".to_string(),
            Some(c) if r.unique => format!("unique among {} starts", c.starts),
            Some(c) => format!(
                "NOT unique: {} local minima over {} starts",
                r.minima_found.len(),
                c.starts
            ),
        };
        println!("  uniqueness: {line}");
    }
}

pub fn solve(args: SolveArgs) -> Outcome {
    let a = load(&args.input)?;
    let opts = solve_options(&args.solver)?;
    let mut results = Vec::new();
    let mut failures = Vec::new();
    let mut worst: Option<CliError> = None;
    for m in args.method.methods() {
        match solvers::solve(&a, m, &opts) {
            Ok(r) => {
                if !r.converged {
                    worst = Some(CliError::NotConverged(format!(
                        "{m} did not converge after {} iterations",
                        r.iterations
                    )));
                }
                results.push(r);
            }
            Err(e) => {
                failures.push(MethodFailure {
                    method: m,
                    error: e.to_string(),
                });
                let e = CliError::from(e);
                if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                    worst = Some(e);
                }
            }
        }
    }
    if args.json {
        let out = SolveOutput {
            n: a.n(),
            labels: a.labels().map(<[String]>::to_vec),
            results,
            failures,
        };
        println!("{}", json(&out)?);
    } else {
        let names = names(&a);
        for r in &results {
            print_result(&names, r);
        }
        for f in &failures {
            println!("{}\n  failed: {}", f.method, f.error);
        }
    }
    worst.map_or(Ok(()), Err)
}

pub fn inconsistency(args: InconsistencyArgs) -> Outcome {
    let a = load(&args.input)?;
    let r = a.inconsistency_with(pcx_core::pcm::ACCEPTABLE_INCONSISTENCY, args.all_triads);
    if args.json {
        println!("{}", json(&r)?);
        return Ok(());
    }
    println!("inconsistency: {:.12}", r.global_value);
    match &r.worst {
        Some(t) => println!(
            "worst triad: ({}, {}, {})  a({},{}) = {}, a({},{}) = {}, a({},{}) = {}",
            t.i + 1,
            t.k + 1,
            t.j + 1,
            t.i + 1,
            t.k + 1,
            num(t.a_ik),
            t.k + 1,
            t.j + 1,
            num(t.a_kj),
            t.i + 1,
            t.j + 1,
            num(t.a_ij)
        ),
        None => println!("worst triad: none (no triads in a 2x2 matrix)"),
    }
    if r.acceptable {
        println!("verdict: acceptable (<= 1/3)");
    } else {
        println!("verdict: unacceptable (> 1/3)");
    }
    if let Some(all) = &r.all_triads {
        println!("triads:");
        for t in all {
            println!("  ({}, {}, {})  {:.12}", t.i + 1, t.k + 1, t.j + 1, t.value);
        }
    }
    Ok(())
}

pub fn analyze(args: AnalyzeArgs) -> Outcome {
    if args.curves {
        let rows = root_curves(args.w_min, args.w_max, args.points)?;
        let mut out = std::io::stdout().lock();
        let write = || -> std::io::Result<()> {
            writeln!(out, "w,phi,psi")?;
            for (w, phi, psi) in rows {
                writeln!(out, "{w},{phi},{psi}")?;
            }
            Ok(())
        };
        return write().map_err(|e| CliError::Input(e.to_string()));
    }
    let path = args.input.expect("clap requires input without --curves");
    let a = load(&path)?;
    let report = certify(&a);
    if args.json {
        println!("{}", json(&report)?);
        return Ok(());
    }
    let a0 = ConvexityConstants::get().a0;
    println!(
        "a0 = {a0:.12}  (admissible band [{:.12}, {a0:.12}])",
        1.0 / a0
    );
    println!("entries:");
    for (i, j, v) in a.upper_entries() {
        let status = if report.violations.iter().any(|x| (x.i, x.j) == (i, j)) {
            "outside band"
        } else {
            "admissible"
        };
        println!("  a({},{}) = {:<14} {status}", i + 1, j + 1, num(v));
    }
    for x in &report.violations {
        let (op, bound) = if x.a_ij > a0 {
            (">", a0)
        } else {
            ("<", 1.0 / a0)
        };
        println!(
            "violation ({},{}): {} {op} {:.6}",
            x.i + 1,
            x.j + 1,
            num(x.a_ij),
            bound
        );
    }
    let verdict = match report.verdict {
        Verdict::UniqueGuaranteed => "UNIQUE_GUARANTEED",
        Verdict::Unknown => "UNKNOWN",
    };
    println!("verdict: {verdict}");
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    scale: Option<String>,
    n: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
    delta: Option<f64>,
    snap: Option<bool>,
    starts: Option<usize>,
}

fn simulate_config(args: &SimulateArgs) -> Result<MonteCarloConfig, CliError> {
    let file: SimulateFile = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
        }
        None => SimulateFile::default(),
    };
    let scale_name = args
        .scale
        .clone()
        .or(file.scale)
        .unwrap_or_else(|| "1-3".into());
    let scale = scale_by_name(&scale_name)?;
    let mut cfg = MonteCarloConfig::new(
        scale,
        args.n.or(file.n).unwrap_or(4),
        args.trials.or(file.trials).unwrap_or(1000),
        args.seed.or(file.seed).unwrap_or(0),
    );
    if let Some(d) = args.delta.or(file.delta) {
        cfg.perturb_delta = d;
    }
    if let Some(s) = args.snap.or(file.snap) {
        cfg.snap = s;
    }
    if let Some(s) = args.starts.or(file.starts) {
        cfg.starts = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_simulation(
    cfg: &MonteCarloConfig,
    threads: Option<usize>,
) -> Result<MonteCarloReport, CliError> {
    match threads {
        None => Ok(run_monte_carlo(cfg)?),
        Some(0) => Err(CliError::Input("--threads must be at least 1".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Input(e.to_string()))?;
            Ok(pool.install(|| run_monte_carlo(cfg))?)
        }
    }
}

pub fn simulate(args: SimulateArgs) -> Outcome {
    let cfg = simulate_config(&args)?;
    let report = run_simulation(&cfg, args.threads)?;
    let write = |path: &Path, text: String| {
        fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    };
    write(&args.csv_out, report.to_csv()?)?;
    write(&args.json_out, report.aggregate_json()? + "\n")?;
    let g = &report.aggregate;
    println!(
        "scale {}, n = {}, trials = {}, seed = {}, delta = {}, snap = {}",
        cfg.scale.name(),
        cfg.n,
        cfg.trials,
        cfg.seed,
        cfg.perturb_delta,
        cfg.snap
    );
    println!("mean inconsistency:      {:.6}", g.mean_inconsistency);
    println!("max inconsistency:       {:.6}", g.max_inconsistency);
    println!("fraction acceptable:     {:.6}", g.fraction_acceptable);
    println!("fraction certified:      {:.6}", g.fraction_certified);
    println!("fraction unique:         {:.6}", g.fraction_unique);
    println!("mean lsm distance:       {:.6}", g.mean_lsm_objective);
    println!("max weight disagreement: {:.6}", g.max_weight_disagreement);
    println!(
        "wrote {} and {}",
        args.csv_out.display(),
        args.json_out.display()
    );
    Ok(())
}

pub fn verify(args: VerifyArgs) -> Outcome {
    let a = load(&args.input)?;
    if a.n() > MAX_GRID_N {
        return Err(CoreError::UnsupportedSize {
            n: a.n(),
            max: MAX_GRID_N,
        }
        .into());
    }
    let opts = solve_options(&args.solver)?;
    let points = args.points.unwrap_or(if a.n() == 4 { 201 } else { 601 });
    let grid = grid_min_lsm(&a, &GridSpec::for_matrix(&a).with_points(points))?;
    let lsm = solve_lsm(&a, &opts)?;
    let solver_t = LogPoint::centered(lsm.weights.logs());
    let max_log_distance = solver_t.sup_distance(&grid.t);
    let objective_gap = (lsm.objective - grid.objective).abs() / grid.objective.max(1.0);
    let agree = max_log_distance <= VERIFY_TOL && objective_gap <= VERIFY_TOL;
    if args.json {
        let out = VerifyOutput {
            n: a.n(),
            solver_objective: lsm.objective,
            grid_objective: grid.objective,
            solver_t,
            grid,
            max_log_distance,
            objective_gap,
            tolerance: VERIFY_TOL,
            agree,
        };
        println!("{}", json(&out)?);
    } else {
        println!("solver objective: {:.12e}", lsm.objective);
        println!("grid objective:   {:.12e}", grid.objective);
        println!("max log-weight distance: {max_log_distance:.3e}");
        println!("relative objective gap:  {objective_gap:.3e}");
        println!(
            "{} (tolerance {VERIFY_TOL:e})",
            if agree { "AGREE" } else { "DISAGREE" }
        );
    }
    if !lsm.converged {
        return Err(CliError::NotConverged(
            "least-squares solver did not converge".into(),
        ));
    }
    Ok(())
}

pub fn serve(args: ServeArgs) -> Outcome {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(false)
        .init();
    let store = if args.in_memory {
        SessionStore::in_memory()
    } else {
        SessionStore::open(&args.data_dir).map_err(|e| CliError::Input(e.to_string()))?
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Input(e.to_string()))?;
    runtime.block_on(async {
        let addr = format!("{}:{}", args.bind, args.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Input(format!("cannot bind {addr}: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| CliError::Input(e.to_string()))?;
        println!("listening on http://{local}");
        let _ = std::io::stdout().flush();
        pcx_service::serve(listener, Arc::new(store))
            .await
            .map_err(|e| CliError::Input(format!("server error: {e}")))
    })
}
