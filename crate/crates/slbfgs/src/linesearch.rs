//! Step-length selection: Armijo backtracking and a bracket-zoom search
//! for the (weak or strong) Wolfe--Powell conditions.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearchKind {
    Armijo,
    Wolfe,
    StrongWolfe,
}

/// Line-search constants. `sigma` is the sufficient-decrease constant,
/// `beta` the backtracking factor, `eta` the curvature constant for the
/// Wolfe kinds (must satisfy `sigma < eta < 1`).
#[derive(Debug, Clone, Copy)]
pub struct LineSearchConfig {
    pub kind: LineSearchKind,
    pub sigma: f64,
    pub beta: f64,
    pub eta: f64,
    pub max_steps: usize,
    /// Largest admissible trial step (Wolfe bracket bound).
    pub step_max: f64,
    /// Bracket width below which the zoom phase gives up.
    pub width_tol: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            kind: LineSearchKind::Armijo,
            sigma: 1e-4,
            beta: 0.5,
            eta: 0.9,
            max_steps: 50,
            step_max: 2.0,
            width_tol: 1e-6,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma > 0.0
            && self.sigma < 1.0
            && self.beta > 0.0
            && self.beta < 1.0
            && (self.kind == LineSearchKind::Armijo || (self.eta > self.sigma && self.eta < 1.0));
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "line search constants out of range: sigma={}, beta={}, eta={}",
                self.sigma, self.beta, self.eta
            )))
        }
    }
}

/// Accepted step and evaluation counters.
#[derive(Debug, Clone, Copy)]
pub struct LineSearchResult {
    pub alpha: f64,
    /// Objective evaluations (line search trials); feeds the adaptive
    /// controller's nu.
    pub n_evals: usize,
    pub n_grad_evals: usize,
    pub success: bool,
    /// Objective value at the accepted step, saving a re-evaluation.
    pub phi_alpha: f64,
}

/// Backtracking: the largest step in `{1, beta, beta^2, ...}` satisfying
/// the Armijo condition `phi(alpha) <= phi0 + alpha sigma slope0`.
pub fn armijo_backtrack(
    mut phi: impl FnMut(f64) -> f64,
    phi0: f64,
    slope0: f64,
    cfg: &LineSearchConfig,
) -> Result<LineSearchResult> {
    if slope0 >= 0.0 {
        return Err(Error::NotDescent(slope0));
    }
    let mut alpha = 1.0;
    let mut n_evals = 0;
    let mut value = phi0;
    for _ in 0..=cfg.max_steps {
        value = phi(alpha);
        n_evals += 1;
        if value <= phi0 + alpha * cfg.sigma * slope0 {
            return Ok(LineSearchResult {
                alpha,
                n_evals,
                n_grad_evals: 0,
                success: true,
                phi_alpha: value,
            });
        }
        alpha *= cfg.beta;
    }
    Ok(LineSearchResult {
        alpha: alpha / cfg.beta,
        n_evals,
        n_grad_evals: 0,
        success: false,
        phi_alpha: value,
    })
}

/// Bracket-and-zoom search for a step satisfying the Armijo condition
/// plus the weak or strong curvature condition, cf. the standard
/// interpolation scheme of Nocedal--Wright (Algorithms 3.5/3.6) with
/// bisection safeguarding.
pub fn wolfe_search(
    mut phi: impl FnMut(f64) -> f64,
    mut dphi: impl FnMut(f64) -> f64,
    phi0: f64,
    slope0: f64,
    cfg: &LineSearchConfig,
) -> Result<LineSearchResult> {
    if slope0 >= 0.0 {
        return Err(Error::NotDescent(slope0));
    }
    let strong = cfg.kind == LineSearchKind::StrongWolfe;
    let mut n_evals = 0usize;
    let mut n_grad_evals = 0usize;

    let armijo_ok =
        |alpha: f64, value: f64| -> bool { value <= phi0 + alpha * cfg.sigma * slope0 };
    let curvature_ok = |slope: f64| -> bool {
        if strong {
            slope.abs() <= cfg.eta * slope0.abs()
        } else {
            slope >= cfg.eta * slope0
        }
    };

    let fail = |alpha: f64, value: f64, n_evals: usize, n_grad_evals: usize| LineSearchResult {
        alpha,
        n_evals,
        n_grad_evals,
        success: false,
        phi_alpha: value,
    };

    // Bracketing phase.
    let mut alpha_prev = 0.0;
    let mut phi_prev = phi0;
    let mut slope_prev = slope0;
    let mut alpha = 1.0f64.min(cfg.step_max);
    let mut bracket: Option<(f64, f64, f64, f64, f64)> = None; // (lo, phi_lo, slope_lo, hi, phi_hi)
    for i in 0..cfg.max_steps {
        let value = phi(alpha);
        n_evals += 1;
        if !armijo_ok(alpha, value) || (i > 0 && value >= phi_prev) {
            bracket = Some((alpha_prev, phi_prev, slope_prev, alpha, value));
            break;
        }
        let slope = dphi(alpha);
        n_grad_evals += 1;
        if curvature_ok(slope) {
            return Ok(LineSearchResult {
                alpha,
                n_evals,
                n_grad_evals,
                success: true,
                phi_alpha: value,
            });
        }
        if slope >= 0.0 {
            bracket = Some((alpha, value, slope, alpha_prev, phi_prev));
            break;
        }
        if alpha >= cfg.step_max {
            return Ok(fail(alpha, value, n_evals, n_grad_evals));
        }
        alpha_prev = alpha;
        phi_prev = value;
        slope_prev = slope;
        alpha = (2.0 * alpha).min(cfg.step_max);
    }

    let Some((mut lo, mut phi_lo, mut slope_lo, mut hi, mut phi_hi)) = bracket else {
        return Ok(fail(alpha, phi_prev, n_evals, n_grad_evals));
    };

    // Zoom phase: quadratic interpolation with bisection fallback.
    for _ in 0..cfg.max_steps {
        if (hi - lo).abs() < cfg.width_tol * lo.abs().max(1.0) {
            return Ok(fail(lo, phi_lo, n_evals, n_grad_evals));
        }
        let denom = phi_hi - phi_lo - slope_lo * (hi - lo);
        let mut trial = if denom != 0.0 {
            lo - 0.5 * slope_lo * (hi - lo) * (hi - lo) / denom
        } else {
            0.5 * (lo + hi)
        };
        let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
        let margin = 0.1 * (b - a);
        if !trial.is_finite() || trial < a + margin || trial > b - margin {
            trial = 0.5 * (lo + hi);
        }
        let value = phi(trial);
        n_evals += 1;
        if !armijo_ok(trial, value) || value >= phi_lo {
            hi = trial;
            phi_hi = value;
        } else {
            let slope = dphi(trial);
            n_grad_evals += 1;
            if curvature_ok(slope) {
                return Ok(LineSearchResult {
                    alpha: trial,
                    n_evals,
                    n_grad_evals,
                    success: true,
                    phi_alpha: value,
                });
            }
            if slope * (hi - lo) >= 0.0 {
                hi = lo;
                phi_hi = phi_lo;
            }
            lo = trial;
            phi_lo = value;
            slope_lo = slope;
        }
    }
    Ok(fail(lo, phi_lo, n_evals, n_grad_evals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg_armijo() -> LineSearchConfig {
        LineSearchConfig {
            kind: LineSearchKind::Armijo,
            sigma: 1e-4,
            beta: 0.5,
            max_steps: 50,
            ..Default::default()
        }
    }

    // phi(alpha) = J(x + alpha d) for J(x) = x^2/2 in 1-D
    fn quad_phi(x: f64, d: f64) -> impl Fn(f64) -> f64 {
        move |alpha| 0.5 * (x + alpha * d) * (x + alpha * d)
    }

    fn quad_dphi(x: f64, d: f64) -> impl Fn(f64) -> f64 {
        move |alpha| (x + alpha * d) * d
    }

    #[test]
    fn armijo_accepts_full_step() {
        let r = armijo_backtrack(quad_phi(1.0, -1.0), 0.5, -1.0, &cfg_armijo()).unwrap();
        assert!(r.success);
        assert_eq!(r.alpha, 1.0);
        assert_eq!(r.n_evals, 1);
    }

    #[test]
    fn armijo_backtracks_once_on_overshoot() {
        // d = -3: alpha=1 overshoots, alpha=0.5 passes
        let r = armijo_backtrack(quad_phi(1.0, -3.0), 0.5, -3.0, &cfg_armijo()).unwrap();
        assert!(r.success);
        assert_eq!(r.alpha, 0.5);
        assert_eq!(r.n_evals, 2);
    }

    #[test]
    fn armijo_rejects_ascent_direction() {
        let r = armijo_backtrack(quad_phi(1.0, 1.0), 0.5, 1.0, &cfg_armijo());
        assert!(matches!(r, Err(Error::NotDescent(_))));
    }

    #[test]
    fn armijo_reports_failure_when_budget_exhausted() {
        // phi that never decreases
        let r = armijo_backtrack(|_| 1.0, 0.0, -1.0, &cfg_armijo()).unwrap();
        assert!(!r.success);
        assert_eq!(r.n_evals, cfg_armijo().max_steps + 1);
    }

    #[test]
    fn armijo_matches_exhaustive_scan_on_random_quadratics() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let cfg = cfg_armijo();
        for _ in 0..200 {
            let q = rng.gen_range(0.1..10.0); // phi = q a^2/2 + slope0 a
            let slope0 = -rng.gen_range(0.1..10.0);
            let phi = |a: f64| 0.5 * q * a * a + slope0 * a;
            let r = armijo_backtrack(phi, 0.0, slope0, &cfg).unwrap();
            let mut expect = None;
            let mut a = 1.0;
            for _ in 0..=cfg.max_steps {
                if phi(a) <= a * cfg.sigma * slope0 {
                    expect = Some(a);
                    break;
                }
                a *= cfg.beta;
            }
            assert_eq!(r.success, expect.is_some());
            if let Some(e) = expect {
                assert_eq!(r.alpha, e);
            }
        }
    }

    #[test]
    fn armijo_counts_phi_invocations() {
        let mut calls = 0;
        let r = armijo_backtrack(
            |a| {
                calls += 1;
                0.5 * (1.0 - 3.0 * a) * (1.0 - 3.0 * a)
            },
            0.5,
            -3.0,
            &cfg_armijo(),
        )
        .unwrap();
        assert_eq!(r.n_evals, calls);
    }

    fn cfg_wolfe(strong: bool) -> LineSearchConfig {
        LineSearchConfig {
            kind: if strong {
                LineSearchKind::StrongWolfe
            } else {
                LineSearchKind::Wolfe
            },
            sigma: 1e-4,
            eta: 0.9,
            beta: 0.5,
            max_steps: 60,
            step_max: 2.0,
            width_tol: 1e-6,
        }
    }

    #[test]
    fn wolfe_accepts_exact_minimizer_step() {
        // x=1, d=-1: alpha=1 lands on the minimum, slope there is 0
        for strong in [false, true] {
            let r = wolfe_search(
                quad_phi(1.0, -1.0),
                quad_dphi(1.0, -1.0),
                0.5,
                -1.0,
                &cfg_wolfe(strong),
            )
            .unwrap();
            assert!(r.success);
            assert_eq!(r.alpha, 1.0);
        }
    }

    #[test]
    fn wolfe_conditions_hold_at_returned_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..300 {
            let q = rng.gen_range(0.05..20.0);
            let slope0 = -rng.gen_range(0.05..20.0);
            let strong = rng.gen_bool(0.5);
            let cfg = cfg_wolfe(strong);
            let phi = |a: f64| 0.5 * q * a * a + slope0 * a;
            let dphi = |a: f64| q * a + slope0;
            let r = wolfe_search(phi, dphi, 0.0, slope0, &cfg).unwrap();
            if !r.success {
                continue;
            }
            let a = r.alpha;
            assert!(phi(a) <= a * cfg.sigma * slope0 + 1e-14);
            if strong {
                assert!(dphi(a).abs() <= cfg.eta * slope0.abs() + 1e-12);
            } else {
                assert!(dphi(a) >= cfg.eta * slope0 - 1e-12);
            }
        }
    }

    #[test]
    fn wolfe_strong_at_exact_quadratic_minimizer() {
        // exact minimizer alpha* = -slope0/q has zero directional derivative
        let q = 3.0;
        let slope0 = -1.5;
        let a_star: f64 = -slope0 / q;
        let dphi = |a: f64| q * a + slope0;
        assert!(dphi(a_star).abs() <= 0.9 * slope0.abs());
    }

    #[test]
    fn wolfe_counts_evaluations() {
        let mut phi_calls = 0;
        let mut grad_calls = 0;
        let r = wolfe_search(
            |a| {
                phi_calls += 1;
                0.5 * 6.0 * a * a - 2.0 * a
            },
            |a| {
                grad_calls += 1;
                6.0 * a - 2.0
            },
            0.0,
            -2.0,
            &cfg_wolfe(true),
        )
        .unwrap();
        assert!(r.success);
        assert_eq!(r.n_evals, phi_calls);
        assert_eq!(r.n_grad_evals, grad_calls);
    }
}
