//! Sweep harness: trace/summary CSV emission, the key=value sweep spec,
//! and the strategy-by-memory-by-alpha benchmark runner.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::linesearch::{LineSearchConfig, LineSearchKind};
use crate::optimizer::{
    lbfgs_minimize, slbfgs_minimize, OptimizerConfig, Problem, RunResult, StoppingRule, Strategy,
};
use crate::profile::{
    default_tau_grid, newton_diagnostics, performance_profile, NewtonDiagnostics, ProfileTable,
};

/// 17 significant digits; round-trips exactly through f64 parsing.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub const TRACE_HEADER: &str =
    "k,J,grad_norm,alpha,tau,n_ls,pair_accepted,rho_sign,inner_iters,inner_rel_res,fallback,cos_newton,ratio_newton";

/// One row of an emitted trace CSV; optional columns are empty when the
/// quantity is unavailable (no inner solver, no dense Hessian).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub j: f64,
    pub grad_norm: f64,
    pub alpha: f64,
    pub tau: f64,
    pub n_ls: usize,
    pub pair_accepted: bool,
    pub rho_sign: i8,
    pub inner_iters: Option<usize>,
    pub inner_rel_res: Option<f64>,
    pub fallback: bool,
    pub cos_newton: Option<f64>,
    pub ratio_newton: Option<f64>,
}

pub fn trace_rows(result: &RunResult, diag: Option<&NewtonDiagnostics>) -> Vec<TraceRow> {
    result
        .trace
        .iter()
        .enumerate()
        .map(|(i, r)| TraceRow {
            k: r.k,
            j: r.j,
            grad_norm: r.grad_norm,
            alpha: r.alpha,
            tau: r.tau,
            n_ls: r.n_line_search,
            pair_accepted: r.pair_accepted,
            rho_sign: r.rho_sign,
            inner_iters: r.inner_stats.map(|s| s.iterations),
            inner_rel_res: r.inner_stats.map(|s| s.relative_residual),
            fallback: r.fallback_used,
            cos_newton: diag.map(|d| d.cosines[i]),
            ratio_newton: diag.map(|d| d.ratios[i]),
        })
        .collect()
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 128);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.k,
            format_float(r.j),
            format_float(r.grad_norm),
            format_float(r.alpha),
            format_float(r.tau),
            r.n_ls,
            r.pair_accepted as u8,
            r.rho_sign,
            r.inner_iters.map(|i| i.to_string()).unwrap_or_default(),
            opt_float(r.inner_rel_res),
            r.fallback as u8,
            opt_float(r.cos_newton),
            opt_float(r.ratio_newton),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::InvalidConfig(format!("bad {name} field `{s}` in trace CSV")))
}

fn parse_opt<T: std::str::FromStr>(s: &str, name: &str) -> Result<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_field(s, name).map(Some)
    }
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        other => {
            return Err(Error::InvalidConfig(format!(
                "unexpected trace header: {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 13 {
            return Err(Error::InvalidConfig(format!(
                "trace row has {} fields, expected 13",
                f.len()
            )));
        }
        rows.push(TraceRow {
            k: parse_field(f[0], "k")?,
            j: parse_field(f[1], "J")?,
            grad_norm: parse_field(f[2], "grad_norm")?,
            alpha: parse_field(f[3], "alpha")?,
            tau: parse_field(f[4], "tau")?,
            n_ls: parse_field(f[5], "n_ls")?,
            pair_accepted: parse_field::<u8>(f[6], "pair_accepted")? != 0,
            rho_sign: parse_field(f[7], "rho_sign")?,
            inner_iters: parse_opt(f[8], "inner_iters")?,
            inner_rel_res: parse_opt(f[9], "inner_rel_res")?,
            fallback: parse_field::<u8>(f[10], "fallback")? != 0,
            cos_newton: parse_opt(f[11], "cos_newton")?,
            ratio_newton: parse_opt(f[12], "ratio_newton")?,
        });
    }
    Ok(rows)
}

/// Parsed sweep description. Missing list keys default to empty, making
/// the sweep a no-op.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub m: usize,
    pub strategies: Vec<Strategy>,
    pub memories: Vec<Option<usize>>,
    pub alphas: Vec<f64>,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub line_search: LineSearchKind,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            m: 4,
            strategies: Vec::new(),
            memories: Vec::new(),
            alphas: Vec::new(),
            grad_tol: 1e-13,
            max_iter: 10_000,
            line_search: LineSearchKind::Armijo,
        }
    }
}

pub fn parse_memory(s: &str) -> Result<Option<usize>> {
    if s.eq_ignore_ascii_case("inf") {
        Ok(None)
    } else {
        s.parse()
            .map(Some)
            .map_err(|_| Error::InvalidConfig(format!("bad memory value `{s}`")))
    }
}

pub fn memory_tag(m: Option<usize>) -> String {
    match m {
        Some(l) => l.to_string(),
        None => "inf".into(),
    }
}

pub fn parse_line_search(s: &str) -> Result<LineSearchKind> {
    match s.to_ascii_lowercase().as_str() {
        "armijo" => Ok(LineSearchKind::Armijo),
        "wolfe" => Ok(LineSearchKind::Wolfe),
        "strong-wolfe" => Ok(LineSearchKind::StrongWolfe),
        other => Err(Error::InvalidConfig(format!("unknown line search `{other}`"))),
    }
}

/// Plain key=value lines; `#` starts a comment; unknown keys are errors.
pub fn parse_sweep_spec(text: &str) -> Result<SweepSpec> {
    let mut spec = SweepSpec::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("line {}: expected key=value", lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let list = || value.split(',').map(str::trim).filter(|s| !s.is_empty());
        match key {
            "m" => spec.m = parse_field(value, "m")?,
            "strategies" => {
                spec.strategies = list().map(Strategy::parse).collect::<Result<_>>()?
            }
            "memories" => spec.memories = list().map(parse_memory).collect::<Result<_>>()?,
            "alphas" => {
                spec.alphas = list()
                    .map(|s| parse_field::<f64>(s, "alpha"))
                    .collect::<Result<_>>()?
            }
            "grad_tol" => spec.grad_tol = parse_field(value, "grad_tol")?,
            "max_iter" => spec.max_iter = parse_field(value, "max_iter")?,
            "line_search" => spec.line_search = parse_line_search(value)?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "line {}: unknown key `{other}`",
                    lineno + 1
                )))
            }
        }
    }
    Ok(spec)
}

/// Aggregate result of one sweep run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub name: String,
    pub strategy: Strategy,
    pub alpha: f64,
    pub memory: Option<usize>,
    pub iterations: usize,
    pub mean_line_searches: f64,
    /// Objective evaluations: line-search trials plus the initial one.
    pub fevals: usize,
    pub time_sec: f64,
    pub converged: bool,
}

/// Dispatch to the classical or structured driver by strategy.
pub fn run_strategy(problem: &Problem, x0: &Vector, cfg: &OptimizerConfig) -> Result<RunResult> {
    if cfg.strategy.is_structured() {
        slbfgs_minimize(problem, x0, cfg)
    } else {
        lbfgs_minimize(problem, x0, cfg)
    }
}

pub fn quadratic_sweep_config(
    strategy: Strategy,
    memory: Option<usize>,
    grad_tol: f64,
    max_iter: usize,
    line_search: LineSearchKind,
) -> OptimizerConfig {
    OptimizerConfig {
        memory,
        strategy,
        stopping: StoppingRule {
            grad_tol,
            fair: None,
        },
        max_iter,
        line_search: LineSearchConfig {
            kind: line_search,
            ..Default::default()
        },
        use_quadratic_shortcut: true,
        ..Default::default()
    }
}

fn run_name(strategy: Strategy, memory: Option<usize>, alpha: f64) -> String {
    format!("{}_l{}_a{:e}", strategy.name(), memory_tag(memory), alpha)
}

/// Run the full sweep, writing one trace CSV per run plus aggregate,
/// summary and profile CSVs. An empty sweep writes nothing.
pub fn run_suite(spec: &SweepSpec, out_dir: &Path) -> Result<Vec<RunSummary>> {
    let mut summaries = Vec::new();
    if spec.strategies.is_empty() || spec.memories.is_empty() || spec.alphas.is_empty() {
        return Ok(summaries);
    }
    fs::create_dir_all(out_dir)?;
    for &strategy in &spec.strategies {
        for &alpha in &spec.alphas {
            for &memory in &spec.memories {
                let problem = crate::problems::make_quadratic(spec.m, alpha).into_problem();
                let cfg = quadratic_sweep_config(
                    strategy,
                    memory,
                    spec.grad_tol,
                    spec.max_iter,
                    spec.line_search,
                );
                let x0 = Vector::zeros(spec.m * spec.m);
                let start = Instant::now();
                let result = run_strategy(&problem, &x0, &cfg)?;
                let time_sec = start.elapsed().as_secs_f64();
                let diag = newton_diagnostics(&problem, &result)?;
                let name = run_name(strategy, memory, alpha);
                write_trace(
                    &out_dir.join(format!("trace_{name}.csv")),
                    &trace_rows(&result, Some(&diag)),
                )?;
                summaries.push(RunSummary {
                    name,
                    strategy,
                    alpha,
                    memory,
                    iterations: result.iterations(),
                    mean_line_searches: result.mean_line_searches(),
                    fevals: result
                        .trace
                        .iter()
                        .map(|r| r.n_line_search)
                        .sum::<usize>()
                        + 1,
                    time_sec,
                    converged: result.status.converged(),
                });
            }
        }
    }
    write_runs_csv(&out_dir.join("runs.csv"), &summaries)?;
    write_table_csv(&out_dir.join("table.csv"), &summaries)?;
    for metric in [Metric::Iters, Metric::Fevals] {
        let (methods, table) = profile_from_summaries(&summaries, metric)?;
        write_profile_csv(
            &out_dir.join(format!("profile_{}.csv", metric.name())),
            &methods,
            &table,
        )?;
    }
    Ok(summaries)
}

pub const RUNS_HEADER: &str =
    "name,strategy,alpha,memory,iterations,mean_ls,fevals,time_sec,converged";

pub fn write_runs_csv(path: &Path, summaries: &[RunSummary]) -> Result<()> {
    let mut out = String::new();
    out.push_str(RUNS_HEADER);
    out.push('\n');
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.name,
            s.strategy.name(),
            format_float(s.alpha),
            memory_tag(s.memory),
            s.iterations,
            format_float(s.mean_line_searches),
            s.fevals,
            format_float(s.time_sec),
            s.converged as u8,
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunSummary>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RUNS_HEADER => {}
        other => {
            return Err(Error::InvalidConfig(format!(
                "unexpected runs header: {other:?}"
            )))
        }
    }
    let mut out = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::InvalidConfig(format!(
                "runs row has {} fields, expected 9",
                f.len()
            )));
        }
        out.push(RunSummary {
            name: f[0].to_string(),
            strategy: Strategy::parse(f[1])?,
            alpha: parse_field(f[2], "alpha")?,
            memory: parse_memory(f[3])?,
            iterations: parse_field(f[4], "iterations")?,
            mean_line_searches: parse_field(f[5], "mean_ls")?,
            fevals: parse_field(f[6], "fevals")?,
            time_sec: parse_field(f[7], "time_sec")?,
            converged: parse_field::<u8>(f[8], "converged")? != 0,
        });
    }
    Ok(out)
}

/// Long-format aggregate mirroring the three benchmark blocks.
fn write_table_csv(path: &Path, summaries: &[RunSummary]) -> Result<()> {
    let mut out = String::from("block,strategy,alpha,memory,value\n");
    type BlockValue = fn(&RunSummary) -> f64;
    let blocks: [(&str, BlockValue); 3] = [
        ("iterations", |s| s.iterations as f64),
        ("mean_line_searches", |s| s.mean_line_searches),
        ("time_sec", |s| s.time_sec),
    ];
    for (block, value) in blocks {
        for s in summaries {
            out.push_str(&format!(
                "{},{},{:e},{},{}\n",
                block,
                s.strategy.name(),
                s.alpha,
                memory_tag(s.memory),
                format_float(value(s)),
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Iters,
    Time,
    Fevals,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Iters => "iters",
            Metric::Time => "time",
            Metric::Fevals => "fevals",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iters" => Ok(Metric::Iters),
            "time" => Ok(Metric::Time),
            "fevals" => Ok(Metric::Fevals),
            other => Err(Error::InvalidConfig(format!("unknown metric `{other}`"))),
        }
    }
}

/// Build a performance profile across summaries: methods are strategies,
/// problems are (alpha, memory) pairs; failed runs count as +inf.
pub fn profile_from_summaries(
    summaries: &[RunSummary],
    metric: Metric,
) -> Result<(Vec<String>, ProfileTable)> {
    let mut methods: Vec<Strategy> = Vec::new();
    let mut problems: Vec<(u64, String)> = Vec::new();
    for s in summaries {
        if !methods.contains(&s.strategy) {
            methods.push(s.strategy);
        }
        let key = (s.alpha.to_bits(), memory_tag(s.memory));
        if !problems.contains(&key) {
            problems.push(key);
        }
    }
    let mut times = vec![vec![f64::INFINITY; methods.len()]; problems.len()];
    for s in summaries {
        let p = problems
            .iter()
            .position(|k| *k == (s.alpha.to_bits(), memory_tag(s.memory)))
            .unwrap();
        let m = methods.iter().position(|&x| x == s.strategy).unwrap();
        let t = match metric {
            Metric::Iters => s.iterations as f64,
            Metric::Time => s.time_sec,
            Metric::Fevals => s.fevals as f64,
        };
        times[p][m] = if s.converged && t > 0.0 {
            t
        } else {
            f64::INFINITY
        };
    }
    let max_ratio = {
        let mut r = 2.0f64;
        for row in &times {
            let best = row.iter().copied().fold(f64::INFINITY, f64::min);
            if best.is_finite() {
                for &t in row {
                    if t.is_finite() {
                        r = r.max(t / best);
                    }
                }
            }
        }
        r
    };
    let grid = default_tau_grid(max_ratio, 101);
    let table = performance_profile(&times, &grid)?;
    Ok((methods.iter().map(|s| s.name().to_string()).collect(), table))
}

pub fn write_profile_csv(path: &Path, methods: &[String], table: &ProfileTable) -> Result<()> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "tau,{}", methods.join(","))?;
    for (i, &tau) in table.tau_grid.iter().enumerate() {
        let row: Vec<String> = table.curves.iter().map(|c| format_float(c[i])).collect();
        writeln!(file, "{},{}", format_float(tau), row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    #[test]
    fn float_format_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..1000 {
            let v: f64 = if rng.gen_bool(0.5) {
                rng.gen_range(-1e10..1e10)
            } else {
                rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-300..300))
            };
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "through `{s}`");
        }
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempdir().unwrap();
        let rows = vec![
            TraceRow {
                k: 0,
                j: 1.2345678901234567,
                grad_norm: 1e-13,
                alpha: 0.5,
                tau: 1.0,
                n_ls: 2,
                pair_accepted: true,
                rho_sign: 1,
                inner_iters: Some(7),
                inner_rel_res: Some(3.3e-3),
                fallback: false,
                cos_newton: Some(0.99),
                ratio_newton: Some(1.01),
            },
            TraceRow {
                k: 1,
                j: 0.5,
                grad_norm: 1e-14,
                alpha: 1.0,
                tau: 2.0,
                n_ls: 1,
                pair_accepted: false,
                rho_sign: -1,
                inner_iters: None,
                inner_rel_res: None,
                fallback: true,
                cos_newton: None,
                ratio_newton: None,
            },
        ];
        let path = dir.path().join("t.csv");
        write_trace(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(TRACE_HEADER));
        assert_eq!(read_trace(&path).unwrap(), rows);
    }

    #[test]
    fn sweep_spec_parses() {
        let spec = parse_sweep_spec(
            "m = 4\nstrategies = hs, bs, adap\nmemories = 3, 5, inf\nalphas = 1e-5, 1e-1\n\
             grad_tol = 1e-13\nmax_iter = 4000\nline_search = armijo\n# comment\n",
        )
        .unwrap();
        assert_eq!(spec.m, 4);
        assert_eq!(
            spec.strategies,
            vec![Strategy::Hs, Strategy::Bs, Strategy::Adap]
        );
        assert_eq!(spec.memories, vec![Some(3), Some(5), None]);
        assert_eq!(spec.alphas, vec![1e-5, 1e-1]);
        assert_eq!(spec.grad_tol, 1e-13);
        assert_eq!(spec.max_iter, 4000);
    }

    #[test]
    fn sweep_spec_rejects_unknown_keys() {
        assert!(matches!(
            parse_sweep_spec("strategie = hs\n"),
            Err(Error::InvalidConfig(_))
        ));
        assert!(parse_sweep_spec("strategies: hs\n").is_err());
    }

    #[test]
    fn empty_sweep_writes_nothing() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("empty");
        let summaries = run_suite(&SweepSpec::default(), &out).unwrap();
        assert!(summaries.is_empty());
        assert!(!out.exists());
    }

    #[test]
    fn small_sweep_outputs_and_determinism() {
        let spec = parse_sweep_spec(
            "strategies = hs, bs\nmemories = 5\nalphas = 1e-1\n",
        )
        .unwrap();
        let d1 = tempdir().unwrap();
        let d2 = tempdir().unwrap();
        let s1 = run_suite(&spec, d1.path()).unwrap();
        let _s2 = run_suite(&spec, d2.path()).unwrap();
        assert_eq!(s1.len(), 2);
        assert!(s1.iter().all(|s| s.converged));
        for name in ["trace_hs_l5_a1e-1.csv", "trace_bs_l5_a1e-1.csv", "profile_iters.csv"] {
            let a = fs::read(d1.path().join(name)).unwrap();
            let b = fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "nondeterministic output in {name}");
        }
        // summary round-trip
        let back = read_runs_csv(&d1.path().join("runs.csv")).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].iterations, s1[0].iterations);
        assert!(d1.path().join("table.csv").exists());
        // emitted trace matches the in-memory iteration count
        let rows = read_trace(&d1.path().join("trace_bs_l5_a1e-1.csv")).unwrap();
        assert_eq!(rows.len(), s1[1].iterations);
    }

    #[test]
    fn profile_from_summaries_marks_failures() {
        let mk = |strategy, iters, converged| RunSummary {
            name: "x".into(),
            strategy,
            alpha: 1e-1,
            memory: Some(5),
            iterations: iters,
            mean_line_searches: 1.0,
            fevals: iters + 1,
            time_sec: 0.1,
            converged,
        };
        let summaries = vec![mk(Strategy::Hs, 100, true), mk(Strategy::Bs, 30, false)];
        let (methods, table) = profile_from_summaries(&summaries, Metric::Iters).unwrap();
        assert_eq!(methods, vec!["hs".to_string(), "bs".to_string()]);
        assert_eq!(table.ratios[0][0], 1.0);
        assert!(table.ratios[0][1].is_infinite());
    }
}
