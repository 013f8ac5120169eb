//! Seed scaling factors: BB factors for identity seeds, the four
//! secant-derived factors for structured seeds, the cautious safeguard
//! interval and the adaptive weight controller.

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Clamp `t` to `[tau_min, tau_max]`.
pub fn proj_interval(t: f64, tau_min: f64, tau_max: f64) -> Result<f64> {
    if tau_min > tau_max {
        return Err(Error::InvalidInterval(tau_min, tau_max));
    }
    Ok(t.max(tau_min).min(tau_max))
}

/// BB scaling factors `(tau_hat_y, tau_hat_s) = (rho/|y|^2, |s|^2/rho)`
/// with `rho = y's`. Unprojected; callers storing pairs require `rho > 0`.
pub fn bb_factors(s: &Vector, y: &Vector) -> Result<(f64, f64)> {
    let rho = y.dot(s);
    if rho == 0.0 {
        return Err(Error::ZeroRho);
    }
    Ok((rho / y.norm_squared(), s.norm_squared() / rho))
}

/// The candidate scaling factors for a structured seed, already projected
/// into the safeguard interval. `tau_z` and `tau_u` exist only if
/// `rho = z's` is nonzero.
#[derive(Debug, Clone, Copy)]
pub struct ScalingSet {
    pub tau_s: f64,
    pub tau_g: f64,
    pub tau_z: Option<f64>,
    pub tau_u: Option<f64>,
    pub rho: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

/// Secant-derived factors for the structured seed `tau I + S`:
/// least-squares fits of `tau s = z` (tau_s), `s = z/tau` (tau_z), their
/// geometric mean (tau_g) and the unbiased total-least-squares value
/// (tau_u), each clamped to `[tau_min, tau_max]`.
pub fn structured_factors(s: &Vector, z: &Vector, tau_min: f64, tau_max: f64) -> Result<ScalingSet> {
    let s_sq = s.norm_squared();
    if s_sq == 0.0 {
        return Err(Error::ZeroStep);
    }
    if tau_min > tau_max {
        return Err(Error::InvalidInterval(tau_min, tau_max));
    }
    let z_sq = z.norm_squared();
    let rho = z.dot(s);
    let tau_s = proj_interval(rho / s_sq, tau_min, tau_max)?;
    let tau_g = proj_interval((z_sq / s_sq).sqrt(), tau_min, tau_max)?;
    let (tau_z, tau_u) = if rho != 0.0 {
        // lambda is the smaller eigenvalue of the 2x2 Gram matrix of (s, z).
        let lambda = 0.5 * (s_sq + z_sq - ((s_sq - z_sq).powi(2) + 4.0 * rho * rho).sqrt());
        (
            Some(proj_interval(z_sq / rho, tau_min, tau_max)?),
            Some(proj_interval((z_sq - lambda) / rho, tau_min, tau_max)?),
        )
    } else {
        (None, None)
    };
    Ok(ScalingSet {
        tau_s,
        tau_g,
        tau_z,
        tau_u,
        rho,
        tau_min,
        tau_max,
    })
}

/// The cautious safeguard interval for `tau_{k+1}`.
#[derive(Debug, Clone, Copy)]
pub struct SafeguardInterval {
    pub omega_l: f64,
    pub omega_u: f64,
}

/// `omega_l = min{c0, c1 g^c2}`, `omega_u = max{C0, (c1 g^c2)^-1}`.
///
/// For `g = 0` the upper safeguard is infinite; the driver never reaches
/// this case because termination is checked first.
pub fn safeguards(grad_norm: f64, c0: f64, big_c0: f64, c1: f64, c2: f64) -> SafeguardInterval {
    debug_assert!(grad_norm >= 0.0 && c0 >= 0.0 && big_c0 >= c0 && c1 > 0.0 && c2 > 0.0);
    let t = c1 * grad_norm.powf(c2);
    let omega_l = c0.min(t);
    let omega_u = if t == 0.0 {
        f64::INFINITY
    } else {
        big_c0.max(t.recip())
    };
    SafeguardInterval { omega_l, omega_u }
}

/// Constants of the adaptive tau controller. `beta_adap` is the weight
/// shift rate toward tau_z (named to avoid clashing with the line-search
/// backtracking factor).
#[derive(Debug, Clone, Copy)]
pub struct AdapConfig {
    pub delta0: f64,
    pub delta1: f64,
    pub eps0: f64,
    pub eps1: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub beta_adap: f64,
}

impl Default for AdapConfig {
    fn default() -> Self {
        Self {
            delta0: 0.75,
            delta1: 0.1,
            eps0: 1e-3,
            eps1: 1e-4,
            eta0: 0.025,
            eta1: 0.1,
            eta2: 0.05,
            beta_adap: 0.01,
        }
    }
}

/// Simplex weights of the adaptive controller.
#[derive(Debug, Clone, Copy)]
pub struct AdapState {
    pub w_s: f64,
    pub w_g: f64,
    pub w_z: f64,
    pub config: AdapConfig,
}

impl AdapState {
    pub fn new(config: AdapConfig) -> Self {
        Self {
            w_s: 0.0,
            w_g: 0.0,
            w_z: 0.0,
            config,
        }
    }
}

/// One step of the adaptive controller: update the simplex weights from
/// the progress signal and line-search effort, then return the weighted
/// geometric mean of the factors. When `rho <= 0` the result is always
/// `tau_g`.
pub fn adap_step(
    state: &AdapState,
    factors: &ScalingSet,
    nu: usize,
    j_prev: f64,
    j_curr: f64,
    k: usize,
) -> (f64, AdapState) {
    let c = state.config;
    let nu = nu.max(1) as f64;
    let mut next = *state;
    if k == 0 {
        next.w_s = c.delta0;
        next.w_g = 1.0 - c.delta0;
        next.w_z = 0.0;
    } else {
        let progress = (j_curr - j_prev).abs();
        let alpha = if progress <= c.eps1 * j_prev.abs() {
            c.eta2
        } else if progress <= c.eps0 * j_prev.abs() {
            c.eta1
        } else {
            c.eta0
        };
        if state.w_s > 0.0 {
            next.w_s = (state.w_s - alpha * nu).max(0.0);
            next.w_g = 1.0 - next.w_s;
        }
        if state.w_g >= 1.0 || state.w_z > 0.0 {
            next.w_g = (state.w_g - c.beta_adap * nu).max(c.delta1);
            next.w_z = 1.0 - next.w_g;
        }
    }
    let tau = if factors.rho > 0.0 {
        let tau_z = factors.tau_z.expect("tau_z defined for rho > 0");
        factors.tau_s.powf(next.w_s) * factors.tau_g.powf(next.w_g) * tau_z.powf(next.w_z)
    } else {
        // tau_z is undefined here; the weighted mean over (tau_s, tau_g)
        // with renormalized weights is well-defined but overridden below.
        let w_sum = next.w_s + next.w_g;
        let _intermediate = if w_sum > 0.0 {
            factors.tau_s.powf(next.w_s / w_sum) * factors.tau_g.powf(next.w_g / w_sum)
        } else {
            factors.tau_g
        };
        factors.tau_g
    };
    (tau, next)
}
