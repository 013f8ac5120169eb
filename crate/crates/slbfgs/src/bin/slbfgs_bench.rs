//! Benchmark CLI: single quadratic or non-convex runs, full sweeps and
//! performance-profile tables, all emitting CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use slbfgs::linesearch::LineSearchConfig;
use slbfgs::optimizer::{FairTriple, OptimizerConfig, StoppingRule, Strategy};
use slbfgs::problems::{make_nonconvex, make_quadratic};
use slbfgs::profile::newton_diagnostics;
use slbfgs::suite::{
    parse_line_search, parse_memory, parse_sweep_spec, profile_from_summaries, read_runs_csv,
    run_strategy, run_suite, trace_rows, write_profile_csv, write_trace, Metric,
};
use slbfgs::{Result, SeedSolve, Vector};

#[derive(Parser)]
#[command(name = "slbfgs-bench", about = "structured L-BFGS benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Grid size; the problem dimension is m^2.
    #[arg(long, default_value_t = 4)]
    m: usize,
    /// Regularization strength.
    #[arg(long, default_value_t = 1e-1)]
    alpha: f64,
    /// Memory length, or "inf" for unbounded.
    #[arg(long, default_value = "5")]
    memory: String,
    /// hs, hy, bs, bz, bu, bg or adap.
    #[arg(long, default_value = "bs")]
    strategy: String,
    /// armijo or wolfe.
    #[arg(long = "line-search", default_value = "armijo")]
    line_search: String,
    #[arg(long = "grad-tol", default_value_t = 1e-13)]
    grad_tol: f64,
    #[arg(long = "max-iter", default_value_t = 10_000)]
    max_iter: usize,
    /// Inner-solver iteration cap for the seed systems.
    #[arg(long = "inner-maxiter", default_value_t = 50)]
    inner_maxiter: usize,
    /// Inner-solver relative-residual tolerance.
    #[arg(long = "inner-tol", default_value_t = 1e-2)]
    inner_tol: f64,
    /// Solve seed systems by dense factorization instead of the inner
    /// Krylov solver.
    #[arg(long = "exact-seed-solve", default_value_t = false)]
    exact_seed_solve: bool,
    /// Write the per-iteration trace CSV here.
    #[arg(long = "csv-out")]
    csv_out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<OptimizerConfig> {
        Ok(OptimizerConfig {
            memory: parse_memory(&self.memory)?,
            strategy: Strategy::parse(&self.strategy)?,
            line_search: LineSearchConfig {
                kind: parse_line_search(&self.line_search)?,
                ..Default::default()
            },
            seed_solve: if self.exact_seed_solve {
                SeedSolve::Exact
            } else {
                SeedSolve::Iterative {
                    maxiter: self.inner_maxiter,
                    tol: self.inner_tol,
                }
            },
            stopping: StoppingRule {
                grad_tol: self.grad_tol,
                fair: None,
            },
            max_iter: self.max_iter,
            ..Default::default()
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the structured quadratic benchmark problem.
    Quadratic(RunArgs),
    /// Minimize the synthetic non-convex problem.
    Nonconvex {
        #[command(flatten)]
        run: RunArgs,
        /// Seed for the problem instance and starting point.
        #[arg(long = "rng-seed", default_value_t = 0)]
        rng_seed: u64,
        /// Stop on the three-part relative progress test instead of the
        /// gradient norm alone.
        #[arg(long = "fair-stopping", default_value_t = false)]
        fair_stopping: bool,
    },
    /// Run a strategy x memory x alpha sweep from a key=value spec file.
    Sweep {
        #[arg(long = "spec-file")]
        spec_file: PathBuf,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Build a performance-profile CSV from a sweep's runs.csv.
    Profile {
        /// iters, time or fevals.
        #[arg(long)]
        metric: String,
        #[arg(long = "in-dir")]
        in_dir: PathBuf,
        #[arg(long = "csv-out")]
        csv_out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Quadratic(args) => {
            let cfg = args.config()?;
            let problem = make_quadratic(args.m, args.alpha).into_problem();
            let x0 = Vector::zeros(args.m * args.m);
            let result = run_strategy(&problem, &x0, &cfg)?;
            if let Some(path) = &args.csv_out {
                let diag = newton_diagnostics(&problem, &result)?;
                write_trace(path, &trace_rows(&result, Some(&diag)))?;
            }
            report(&result);
        }
        Command::Nonconvex {
            run: args,
            rng_seed,
            fair_stopping,
        } => {
            let mut cfg = args.config()?;
            if fair_stopping {
                cfg.stopping.fair = Some(FairTriple::default());
            }
            let instance = make_nonconvex(args.m, args.alpha, rng_seed)?;
            let x0 = instance.x0.clone();
            let problem = instance.into_problem();
            let result = run_strategy(&problem, &x0, &cfg)?;
            if let Some(path) = &args.csv_out {
                // the Hessian may be indefinite away from the minimum, so
                // Newton diagnostics are best-effort here
                let diag = newton_diagnostics(&problem, &result).ok();
                write_trace(path, &trace_rows(&result, diag.as_ref()))?;
            }
            report(&result);
        }
        Command::Sweep { spec_file, out_dir } => {
            let text = std::fs::read_to_string(&spec_file)?;
            let spec = parse_sweep_spec(&text)?;
            let summaries = run_suite(&spec, &out_dir)?;
            println!("{} runs written to {}", summaries.len(), out_dir.display());
            for s in &summaries {
                println!(
                    "{}: {} iterations, converged = {}",
                    s.name, s.iterations, s.converged
                );
            }
        }
        Command::Profile {
            metric,
            in_dir,
            csv_out,
        } => {
            let metric = Metric::parse(&metric)?;
            let summaries = read_runs_csv(&in_dir.join("runs.csv"))?;
            let (methods, table) = profile_from_summaries(&summaries, metric)?;
            write_profile_csv(&csv_out, &methods, &table)?;
            println!("profile ({}) written to {}", metric.name(), csv_out.display());
        }
    }
    Ok(())
}

fn report(result: &slbfgs::RunResult) {
    println!(
        "status: {:?}, iterations: {}, J = {:e}, |grad J| = {:e}",
        result.status,
        result.iterations(),
        result.final_j,
        result.final_grad_norm
    );
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
