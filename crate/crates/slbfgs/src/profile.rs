//! Benchmark analysis: performance profiles, Newton-direction
//! diagnostics and linear-rate estimation from optimizer traces.

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::optimizer::{Problem, RunResult};

/// Performance-profile curves: for each method (solver) s, the fraction
/// of problems whose metric ratio `r_{p,s} = t_{p,s} / min_sigma t_{p,sigma}`
/// is within a factor tau of the per-problem best.
#[derive(Debug, Clone)]
pub struct ProfileTable {
    pub tau_grid: Vec<f64>,
    /// `curves[s][i]` = rho_s(tau_grid[i]).
    pub curves: Vec<Vec<f64>>,
    /// `ratios[p][s]`; +inf marks a failed run.
    pub ratios: Vec<Vec<f64>>,
}

/// `times[p][s]` is the metric of method s on problem p, > 0, with +inf
/// for failures. Errors if some problem row is all +inf.
pub fn performance_profile(times: &[Vec<f64>], tau_grid: &[f64]) -> Result<ProfileTable> {
    let n_p = times.len();
    if n_p == 0 {
        return Err(Error::InvalidConfig("no problems in profile input".into()));
    }
    let n_s = times[0].len();
    let mut ratios = Vec::with_capacity(n_p);
    for (p, row) in times.iter().enumerate() {
        if row.len() != n_s {
            return Err(Error::DimensionMismatch(row.len(), n_s));
        }
        let best = row.iter().copied().fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return Err(Error::AllFailed(p));
        }
        ratios.push(row.iter().map(|&t| t / best).collect::<Vec<f64>>());
    }
    let mut curves = Vec::with_capacity(n_s);
    for s in 0..n_s {
        let curve = tau_grid
            .iter()
            .map(|&tau| {
                ratios.iter().filter(|r| r[s] <= tau).count() as f64 / n_p as f64
            })
            .collect();
        curves.push(curve);
    }
    Ok(ProfileTable {
        tau_grid: tau_grid.to_vec(),
        curves,
        ratios,
    })
}

/// Log-spaced grid on [1, max(tau_max, 2)] with `points` samples.
pub fn default_tau_grid(tau_max: f64, points: usize) -> Vec<f64> {
    let hi = tau_max.max(2.0).ln();
    let n = points.max(2);
    (0..n)
        .map(|i| (hi * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Per-iteration comparison against the exact Newton direction
/// `d_N = -(grad^2 J)^-1 grad J`.
#[derive(Debug, Clone)]
pub struct NewtonDiagnostics {
    /// cos angle(d_k, d_N) per iteration, in [-1, 1].
    pub cosines: Vec<f64>,
    /// |d_k| / |d_N| per iteration.
    pub ratios: Vec<f64>,
}

impl NewtonDiagnostics {
    pub fn median_cosine(&self) -> f64 {
        median(&self.cosines)
    }
}

fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if v.is_empty() {
        return f64::NAN;
    }
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Requires the problem's dense Hessian; it must be SPD at the iterates.
pub fn newton_diagnostics(problem: &Problem, result: &RunResult) -> Result<NewtonDiagnostics> {
    let mut cosines = Vec::with_capacity(result.directions.len());
    let mut ratios = Vec::with_capacity(result.directions.len());
    for (x, d) in result.points.iter().zip(&result.directions) {
        let h = problem
            .dense_hessian(x)
            .ok_or_else(|| Error::InvalidConfig("problem has no dense Hessian".into()))?;
        let g = problem.gradient(x);
        let d_n = h
            .cholesky()
            .ok_or_else(|| Error::InvalidConfig("Hessian is not SPD at an iterate".into()))?
            .solve(&(-&g));
        let denom = d.norm() * d_n.norm();
        cosines.push(if denom == 0.0 { 1.0 } else { d.dot(&d_n) / denom });
        ratios.push(if d_n.norm() == 0.0 {
            1.0
        } else {
            d.norm() / d_n.norm()
        });
    }
    Ok(NewtonDiagnostics { cosines, ratios })
}

/// Fitted local rates on the tail of a converged run.
#[derive(Debug, Clone, Copy)]
pub struct RateEstimate {
    /// Geometric mean of successive `(J_{k+1}-J*)/(J_k-J*)`; < 1 on
    /// q-linearly converging runs.
    pub q_factor: f64,
    /// Least-squares slope of `log |x_k - x*|` against k (negative on
    /// r-linearly converging runs).
    pub r_x_slope: f64,
    /// Least-squares slope of `log |grad J(x_k)|` against k.
    pub r_g_slope: f64,
}

fn ls_slope(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = points.collect();
    let n = pts.len() as f64;
    let kx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ky = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - kx) * (p.1 - ky)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - kx) * (p.0 - kx)).sum();
    num / den
}

/// Estimate rates from the objective gaps above the numerical floor
/// (J - J* > 1e-24). Needs at least 10 usable points.
pub fn estimate_rate(result: &RunResult, j_star: f64, x_star: &Vector) -> Result<RateEstimate> {
    let js = result.objective_values();
    let gaps: Vec<f64> = js
        .iter()
        .map(|&j| j - j_star)
        .take_while(|&g| g > 1e-24)
        .collect();
    if gaps.len() < 10 {
        return Err(Error::ShortTail(gaps.len()));
    }
    let t = gaps.len();
    let q_factor = (gaps[t - 1] / gaps[0]).powf(1.0 / (t - 1) as f64);
    // NaN counts as "no decrease"
    if q_factor.partial_cmp(&1.0) != Some(std::cmp::Ordering::Less) {
        return Err(Error::NoDecrease);
    }
    let r_x_slope = ls_slope(
        result
            .points
            .iter()
            .enumerate()
            .map(|(k, x)| (k as f64, (x - x_star).norm()))
            .filter(|&(_, e)| e > 1e-300)
            .map(|(k, e)| (k, e.ln())),
    );
    let mut grads: Vec<f64> = result.trace.iter().map(|r| r.grad_norm).collect();
    grads.push(result.final_grad_norm);
    let r_g_slope = ls_slope(
        grads
            .iter()
            .enumerate()
            .filter(|&(_, &g)| g > 1e-300)
            .map(|(k, &g)| (k as f64, g.ln())),
    );
    Ok(RateEstimate {
        q_factor,
        r_x_slope,
        r_g_slope,
    })
}
