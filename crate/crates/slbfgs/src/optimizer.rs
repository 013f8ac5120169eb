//! Top-level drivers: classical inverse L-BFGS with BB-scaled identity
//! seeds, and the structured variant with seed `tau_k I + S_k`, cautious
//! pair storage, safeguarded scaling factors and per-iteration traces.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{LinearOperator, Vector, ZeroOperator};
use crate::linesearch::{
    armijo_backtrack, wolfe_search, LineSearchConfig, LineSearchKind, LineSearchResult,
};
use crate::memory::{two_loop, Memory, SeedApplier, SeedSolve};
use crate::minres::SolveStats;
use crate::scaling::{
    adap_step, bb_factors, safeguards, structured_factors, AdapConfig, AdapState,
};

type ObjectiveFn = dyn Fn(&Vector) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&Vector) -> Vector + Send + Sync;
type RegHessianFn = dyn Fn(&Vector) -> Arc<dyn LinearOperator> + Send + Sync;
type DenseHessianFn = dyn Fn(&Vector) -> DMatrix<f64> + Send + Sync;

/// A smooth minimization problem `J = D + S`, supplied through callbacks.
/// The optional pieces expose the structured split: the data-term
/// gradient enables the quadratic-regularizer shortcut for `z_k`, the
/// regularizer Hessian supplies the seed operator `S_k`, and the dense
/// Hessian exists for diagnostics only.
pub struct Problem {
    dimension: usize,
    evaluate: Box<ObjectiveFn>,
    gradient: Box<GradientFn>,
    data_gradient: Option<Box<GradientFn>>,
    regularizer_hessian: Option<Box<RegHessianFn>>,
    dense_hessian: Option<Box<DenseHessianFn>>,
}

impl Problem {
    pub fn new(
        dimension: usize,
        evaluate: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            dimension,
            evaluate: Box::new(evaluate),
            gradient: Box::new(gradient),
            data_gradient: None,
            regularizer_hessian: None,
            dense_hessian: None,
        }
    }

    pub fn with_data_gradient(
        mut self,
        g: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        self.data_gradient = Some(Box::new(g));
        self
    }

    pub fn with_regularizer_hessian(
        mut self,
        h: impl Fn(&Vector) -> Arc<dyn LinearOperator> + Send + Sync + 'static,
    ) -> Self {
        self.regularizer_hessian = Some(Box::new(h));
        self
    }

    pub fn with_dense_hessian(
        mut self,
        h: impl Fn(&Vector) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.dense_hessian = Some(Box::new(h));
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn evaluate(&self, x: &Vector) -> f64 {
        (self.evaluate)(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        (self.gradient)(x)
    }

    pub fn data_gradient(&self, x: &Vector) -> Option<Vector> {
        self.data_gradient.as_ref().map(|f| f(x))
    }

    pub fn has_data_gradient(&self) -> bool {
        self.data_gradient.is_some()
    }

    pub fn regularizer_hessian(&self, x: &Vector) -> Arc<dyn LinearOperator> {
        match &self.regularizer_hessian {
            Some(f) => f(x),
            None => Arc::new(ZeroOperator::new(self.dimension)),
        }
    }

    pub fn dense_hessian(&self, x: &Vector) -> Option<DMatrix<f64>> {
        self.dense_hessian.as_ref().map(|f| f(x))
    }
}

/// Seed-scaling strategy. `Hs`/`Hy` belong to the classical driver,
/// the rest to the structured one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Hs,
    Hy,
    Bs,
    Bz,
    Bu,
    Bg,
    Adap,
}

impl Strategy {
    pub fn is_structured(self) -> bool {
        !matches!(self, Strategy::Hs | Strategy::Hy)
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Hs => "hs",
            Strategy::Hy => "hy",
            Strategy::Bs => "bs",
            Strategy::Bz => "bz",
            Strategy::Bu => "bu",
            Strategy::Bg => "bg",
            Strategy::Adap => "adap",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hs" => Ok(Strategy::Hs),
            "hy" => Ok(Strategy::Hy),
            "bs" => Ok(Strategy::Bs),
            "bz" => Ok(Strategy::Bz),
            "bu" => Ok(Strategy::Bu),
            "bg" => Ok(Strategy::Bg),
            "adap" => Ok(Strategy::Adap),
            other => Err(Error::InvalidConfig(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Cautious-update constants of the structured driver.
#[derive(Debug, Clone, Copy)]
pub struct CautiousParams {
    pub c_s: f64,
    pub c0: f64,
    pub big_c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for CautiousParams {
    fn default() -> Self {
        Self {
            c_s: 1e-9,
            c0: 1e-6,
            big_c0: 1e6,
            c1: 1e-6,
            c2: 1.0,
        }
    }
}

/// The FAIR-style triple of termination thresholds.
#[derive(Debug, Clone, Copy)]
pub struct FairTriple {
    pub tol_j: f64,
    pub tol_x: f64,
    pub tol_g: f64,
}

impl Default for FairTriple {
    fn default() -> Self {
        Self {
            tol_j: 1e-5,
            tol_x: 1e-3,
            tol_g: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StoppingRule {
    pub grad_tol: f64,
    pub fair: Option<FairTriple>,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            fair: None,
        }
    }
}

#[derive(Clone, Copy)]
pub struct OptimizerConfig {
    /// `None` keeps all accepted pairs (`l = inf`).
    pub memory: Option<usize>,
    pub strategy: Strategy,
    pub cautious: CautiousParams,
    pub tau0: f64,
    pub line_search: LineSearchConfig,
    pub seed_solve: SeedSolve,
    pub stopping: StoppingRule,
    pub max_iter: usize,
    /// Compute `z_k` as the difference of data-term gradients instead of
    /// `y_k - S_{k+1} s_k` (valid for quadratic regularizers).
    pub use_quadratic_shortcut: bool,
    pub adap: AdapConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            memory: Some(5),
            strategy: Strategy::Bs,
            cautious: CautiousParams::default(),
            tau0: 1.0,
            line_search: LineSearchConfig::default(),
            seed_solve: SeedSolve::Exact,
            stopping: StoppingRule::default(),
            max_iter: 10_000,
            use_quadratic_shortcut: false,
            adap: AdapConfig::default(),
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        let c = &self.cautious;
        if !(c.c_s > 0.0 && c.c0 >= 0.0 && c.big_c0 >= c.c0 && c.c1 > 0.0 && c.c2 > 0.0) {
            return Err(Error::InvalidConfig(
                "cautious constants must satisfy c_s,c1,c2 > 0 and 0 <= c0 <= C0".into(),
            ));
        }
        if self.tau0 <= 0.0 {
            return Err(Error::InvalidConfig("tau0 must be positive".into()));
        }
        self.line_search.validate()
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// `|grad J| <= eps`.
    GradTol,
    /// All three FAIR conditions held.
    FairTriple,
    MaxIter,
    /// The line search produced no decrease within its budget.
    LineSearchFailed,
    /// Objective or gradient became non-finite; the offending iterate is
    /// returned as the final point.
    NonFinite,
}

impl Status {
    pub fn converged(self) -> bool {
        matches!(self, Status::GradTol | Status::FairTriple)
    }
}

/// One row of the per-iteration trace. Values describe iteration `k`
/// starting at `x_k`; `rho_sign` and `tau_next` stay empty on the final,
/// partially executed iteration.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub k: usize,
    pub j: f64,
    pub grad_norm: f64,
    pub alpha: f64,
    pub tau: f64,
    pub n_line_search: usize,
    pub pair_accepted: bool,
    /// Sign of `z_k' s_k`; 0 when the iteration stopped before computing z.
    pub rho_sign: i8,
    pub inner_stats: Option<SolveStats>,
    pub fallback_used: bool,
    /// tau_{k+1} together with its admissible interval and safeguards,
    /// kept for post-hoc audits.
    pub tau_next: Option<f64>,
    pub tau_interval: Option<(f64, f64)>,
    pub safeguard: Option<(f64, f64)>,
}

/// Full outcome of a minimization run.
pub struct RunResult {
    pub x_final: Vector,
    pub status: Status,
    pub trace: Vec<IterationRecord>,
    /// Iterates `x_0, ..., x_K` (one more entry than the trace).
    pub points: Vec<Vector>,
    /// Search directions `d_0, ..., d_{K-1}`.
    pub directions: Vec<Vector>,
    pub final_j: f64,
    pub final_grad_norm: f64,
}

impl RunResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// Objective values `J(x_0), ..., J(x_K)`.
    pub fn objective_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.trace.iter().map(|r| r.j).collect();
        v.push(self.final_j);
        v
    }

    pub fn mean_line_searches(&self) -> f64 {
        if self.trace.is_empty() {
            return 0.0;
        }
        self.trace.iter().map(|r| r.n_line_search as f64).sum::<f64>() / self.trace.len() as f64
    }
}

/// Termination test on a completed step: the gradient rule fires alone;
/// the FAIR triple requires all three inequalities.
pub fn check_stopping(
    j_prev: f64,
    j_curr: f64,
    x_prev: &Vector,
    x_curr: &Vector,
    grad_norm_curr: f64,
    j0: f64,
    rule: &StoppingRule,
) -> Option<Status> {
    if grad_norm_curr <= rule.grad_tol {
        return Some(Status::GradTol);
    }
    if let Some(fair) = &rule.fair {
        let scale_j = 1.0 + j0.abs();
        let cond_j = (j_curr - j_prev).abs() <= fair.tol_j * scale_j;
        let cond_x = (x_curr - x_prev).norm() <= fair.tol_x * (1.0 + x_curr.norm());
        let cond_g = grad_norm_curr <= fair.tol_g * scale_j;
        if cond_j && cond_x && cond_g {
            return Some(Status::FairTriple);
        }
    }
    None
}

/// Steepest descent scaled by the inverse seed diagonal; always a
/// descent direction when the diagonal is positive.
pub fn diagonal_fallback(grad: &Vector, tau: f64, s_op: &dyn LinearOperator) -> Vector {
    let diag = s_op.diagonal().add_scalar(tau);
    -grad.component_div(&diag)
}

/// Two-loop direction with a descent guarantee: on a non-descent result
/// the seed system is re-solved once at a tenth of the tolerance, then
/// the diagonal fallback takes over.
pub fn choose_direction_with_fallback(
    grad: &Vector,
    mem: &Memory,
    tau: f64,
    s_op: &Arc<dyn LinearOperator>,
    solve: SeedSolve,
) -> Result<(Vector, bool, Option<SolveStats>)> {
    let seed = SeedApplier::Structured {
        tau,
        s_op: Arc::clone(s_op),
        solve,
    };
    let (d, stats) = two_loop(grad, mem, &seed)?;
    if grad.dot(&d) < 0.0 {
        return Ok((d, false, stats));
    }
    if let SeedSolve::Iterative { maxiter, tol } = solve {
        let retry = SeedApplier::Structured {
            tau,
            s_op: Arc::clone(s_op),
            solve: SeedSolve::Iterative {
                maxiter,
                tol: tol / 10.0,
            },
        };
        let (d, stats) = two_loop(grad, mem, &retry)?;
        if grad.dot(&d) < 0.0 {
            return Ok((d, false, stats));
        }
        return Ok((diagonal_fallback(grad, tau, s_op.as_ref()), true, stats));
    }
    Ok((diagonal_fallback(grad, tau, s_op.as_ref()), true, stats))
}

fn run_line_search(
    problem: &Problem,
    x: &Vector,
    d: &Vector,
    j: f64,
    slope0: f64,
    cfg: &LineSearchConfig,
) -> Result<LineSearchResult> {
    let phi = |alpha: f64| problem.evaluate(&(x + d * alpha));
    match cfg.kind {
        LineSearchKind::Armijo => armijo_backtrack(phi, j, slope0, cfg),
        LineSearchKind::Wolfe | LineSearchKind::StrongWolfe => {
            let dphi = |alpha: f64| problem.gradient(&(x + d * alpha)).dot(d);
            wolfe_search(phi, dphi, j, slope0, cfg)
        }
    }
}

fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

struct TraceBuilder {
    trace: Vec<IterationRecord>,
    points: Vec<Vector>,
    directions: Vec<Vector>,
}

impl TraceBuilder {
    fn finish(self, x: Vector, status: Status, j: f64, grad_norm: f64) -> RunResult {
        RunResult {
            x_final: x,
            status,
            trace: self.trace,
            points: self.points,
            directions: self.directions,
            final_j: j,
            final_grad_norm: grad_norm,
        }
    }
}

/// Structured L-BFGS. Per iteration: build the seed `tau_k I + S_k`,
/// take the two-loop direction, line-search, store the pair cautiously,
/// check termination at `x_{k+1}`, then derive `tau_{k+1}` from the
/// safeguarded scaling factors of `(s_k, z_k)`.
pub fn slbfgs_minimize(problem: &Problem, x0: &Vector, cfg: &OptimizerConfig) -> Result<RunResult> {
    cfg.validate()?;
    if !cfg.strategy.is_structured() {
        return Err(Error::InvalidConfig(
            "slbfgs_minimize requires a structured strategy (Bs/Bz/Bu/Bg/Adap)".into(),
        ));
    }

    let mut x = x0.clone();
    let mut j = problem.evaluate(&x);
    let mut g = problem.gradient(&x);
    if !j.is_finite() || !all_finite(&g) {
        return Ok(RunResult {
            x_final: x,
            status: Status::NonFinite,
            trace: Vec::new(),
            points: vec![x0.clone()],
            directions: Vec::new(),
            final_j: j,
            final_grad_norm: f64::NAN,
        });
    }
    let j0 = j;
    let mut grad_norm = g.norm();
    let mut tb = TraceBuilder {
        trace: Vec::new(),
        points: vec![x.clone()],
        directions: Vec::new(),
    };
    if grad_norm <= cfg.stopping.grad_tol {
        return Ok(tb.finish(x, Status::GradTol, j, grad_norm));
    }

    let mut tau = cfg.tau0;
    let mut mem = Memory::new(cfg.memory);
    let mut adap = AdapState::new(cfg.adap);
    let mut s_op = problem.regularizer_hessian(&x);
    let mut data_grad = if cfg.use_quadratic_shortcut {
        problem.data_gradient(&x)
    } else {
        None
    };

    for k in 0..cfg.max_iter {
        let (d, fallback_used, inner_stats) =
            choose_direction_with_fallback(&g, &mem, tau, &s_op, cfg.seed_solve)?;
        let slope0 = g.dot(&d);
        let ls = run_line_search(problem, &x, &d, j, slope0, &cfg.line_search)?;
        let mut record = IterationRecord {
            k,
            j,
            grad_norm,
            alpha: ls.alpha,
            tau,
            n_line_search: ls.n_evals,
            pair_accepted: false,
            rho_sign: 0,
            inner_stats,
            fallback_used,
            tau_next: None,
            tau_interval: None,
            safeguard: None,
        };
        if !ls.success && ls.phi_alpha >= j {
            tb.trace.push(record);
            tb.directions.push(d);
            return Ok(tb.finish(x, Status::LineSearchFailed, j, grad_norm));
        }
        let s = &d * ls.alpha;
        let x_next = &x + &s;
        let j_next = ls.phi_alpha;
        let g_next = problem.gradient(&x_next);
        if !j_next.is_finite() || !all_finite(&g_next) || !all_finite(&x_next) {
            tb.trace.push(record);
            tb.directions.push(d);
            tb.points.push(x_next.clone());
            return Ok(tb.finish(x_next, Status::NonFinite, j_next, g_next.norm()));
        }
        let y = &g_next - &g;
        record.pair_accepted = mem.try_store(s.clone(), y.clone(), cfg.cautious.c_s)?;
        let grad_norm_next = g_next.norm();

        if let Some(status) = check_stopping(
            j,
            j_next,
            &x,
            &x_next,
            grad_norm_next,
            j0,
            &cfg.stopping,
        ) {
            tb.trace.push(record);
            tb.directions.push(d);
            tb.points.push(x_next.clone());
            return Ok(tb.finish(x_next, status, j_next, grad_norm_next));
        }

        let s_op_next = problem.regularizer_hessian(&x_next);
        let z = if cfg.use_quadratic_shortcut && problem.has_data_gradient() {
            let dg_next = problem.data_gradient(&x_next).expect("data gradient");
            let dg = data_grad.take().expect("data gradient");
            data_grad = Some(dg_next.clone());
            dg_next - dg
        } else {
            &y - s_op_next.apply(&s)
        };
        let c = &cfg.cautious;
        let sg = safeguards(grad_norm_next, c.c0, c.big_c0, c.c1, c.c2);
        let factors = structured_factors(&s, &z, sg.omega_l, sg.omega_u)?;
        let rho = factors.rho;
        let tau_next = match cfg.strategy {
            Strategy::Bs => factors.tau_s,
            Strategy::Bg => factors.tau_g,
            Strategy::Bz => {
                if rho > 0.0 {
                    factors.tau_z.expect("tau_z defined for rho > 0")
                } else {
                    factors.tau_g
                }
            }
            Strategy::Bu => {
                if rho > 0.0 {
                    factors.tau_u.expect("tau_u defined for rho > 0")
                } else {
                    factors.tau_g
                }
            }
            Strategy::Adap => {
                let (t, next) = adap_step(&adap, &factors, ls.n_evals.max(1), j, j_next, k);
                adap = next;
                t
            }
            Strategy::Hs | Strategy::Hy => unreachable!(),
        };
        record.rho_sign = if rho > 0.0 {
            1
        } else if rho < 0.0 {
            -1
        } else {
            0
        };
        record.tau_next = Some(tau_next);
        record.tau_interval = Some(if rho > 0.0 {
            (factors.tau_s, factors.tau_z.expect("tau_z for rho > 0"))
        } else {
            (factors.tau_s, factors.tau_g)
        });
        record.safeguard = Some((sg.omega_l, sg.omega_u));
        tb.trace.push(record);
        tb.directions.push(d);
        tb.points.push(x_next.clone());

        x = x_next;
        j = j_next;
        g = g_next;
        grad_norm = grad_norm_next;
        tau = tau_next;
        s_op = s_op_next;
    }
    Ok(tb.finish(x, Status::MaxIter, j, grad_norm))
}

/// Classical inverse L-BFGS with `H^(0) = tau_hat I`. Pairs are stored
/// whenever `y's > 0`; the scaling factor follows the BB rule of the
/// chosen strategy and is kept unchanged when the curvature is not
/// positive.
pub fn lbfgs_minimize(problem: &Problem, x0: &Vector, cfg: &OptimizerConfig) -> Result<RunResult> {
    cfg.validate()?;
    if cfg.strategy.is_structured() {
        return Err(Error::InvalidConfig(
            "lbfgs_minimize requires strategy Hs or Hy".into(),
        ));
    }

    let mut x = x0.clone();
    let mut j = problem.evaluate(&x);
    let mut g = problem.gradient(&x);
    if !j.is_finite() || !all_finite(&g) {
        return Ok(RunResult {
            x_final: x,
            status: Status::NonFinite,
            trace: Vec::new(),
            points: vec![x0.clone()],
            directions: Vec::new(),
            final_j: j,
            final_grad_norm: f64::NAN,
        });
    }
    let j0 = j;
    let mut grad_norm = g.norm();
    let mut tb = TraceBuilder {
        trace: Vec::new(),
        points: vec![x.clone()],
        directions: Vec::new(),
    };
    if grad_norm <= cfg.stopping.grad_tol {
        return Ok(tb.finish(x, Status::GradTol, j, grad_norm));
    }

    let mut tau_hat = cfg.tau0;
    let mut mem = Memory::new(cfg.memory);

    for k in 0..cfg.max_iter {
        let seed = SeedApplier::IdentityScaled { tau_hat };
        let (d, _) = two_loop(&g, &mem, &seed)?;
        let slope0 = g.dot(&d);
        if slope0 >= 0.0 {
            return Err(Error::NotDescent(slope0));
        }
        let ls = run_line_search(problem, &x, &d, j, slope0, &cfg.line_search)?;
        let mut record = IterationRecord {
            k,
            j,
            grad_norm,
            alpha: ls.alpha,
            tau: tau_hat,
            n_line_search: ls.n_evals,
            pair_accepted: false,
            rho_sign: 0,
            inner_stats: None,
            fallback_used: false,
            tau_next: None,
            tau_interval: None,
            safeguard: None,
        };
        if !ls.success && ls.phi_alpha >= j {
            tb.trace.push(record);
            tb.directions.push(d);
            return Ok(tb.finish(x, Status::LineSearchFailed, j, grad_norm));
        }
        let s = &d * ls.alpha;
        let x_next = &x + &s;
        let j_next = ls.phi_alpha;
        let g_next = problem.gradient(&x_next);
        if !j_next.is_finite() || !all_finite(&g_next) || !all_finite(&x_next) {
            tb.trace.push(record);
            tb.directions.push(d);
            tb.points.push(x_next.clone());
            return Ok(tb.finish(x_next, Status::NonFinite, j_next, g_next.norm()));
        }
        let y = &g_next - &g;
        // classical storage rule: y's > 0, no cautious threshold
        record.pair_accepted = mem.try_store(s.clone(), y.clone(), 0.0)?;
        let grad_norm_next = g_next.norm();
        let rho = y.dot(&s);
        record.rho_sign = if rho > 0.0 {
            1
        } else if rho < 0.0 {
            -1
        } else {
            0
        };

        let stop = check_stopping(j, j_next, &x, &x_next, grad_norm_next, j0, &cfg.stopping);

        if rho > 0.0 {
            let (tau_y, tau_s) = bb_factors(&s, &y)?;
            tau_hat = match cfg.strategy {
                Strategy::Hy => tau_y,
                Strategy::Hs => tau_s,
                _ => unreachable!(),
            };
            record.tau_next = Some(tau_hat);
        }
        tb.trace.push(record);
        tb.directions.push(d);
        tb.points.push(x_next.clone());

        if let Some(status) = stop {
            return Ok(tb.finish(x_next, status, j_next, grad_norm_next));
        }

        x = x_next;
        j = j_next;
        g = g_next;
        grad_norm = grad_norm_next;
    }
    Ok(tb.finish(x, Status::MaxIter, j, grad_norm))
}
