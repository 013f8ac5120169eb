//! Benchmark problems: the structured quadratic family with
//! exponentially decaying data eigenvalues and Laplacian regularizer,
//! and a smooth non-convex problem with the same structural split.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{laplacian_2d, Laplacian2d, LinearOperator, ScaledOperator, Vector};
use crate::optimizer::Problem;

/// `J(x) = (x - x*)' (D + alpha S) (x - x*) / 2` on an m-by-m grid with
/// `D_jj = exp(-j)` and `S` the five-point Laplacian; `x* = ones`.
pub struct QuadraticProblem {
    pub m: usize,
    pub n: usize,
    pub alpha: f64,
    pub x_star: Vector,
    d_diag: Vector,
    lap: Arc<Laplacian2d>,
}

pub fn make_quadratic(m: usize, alpha: f64) -> QuadraticProblem {
    assert!(m >= 1 && alpha > 0.0);
    let n = m * m;
    let d_diag = Vector::from_fn(n, |i, _| (-((i + 1) as f64)).exp());
    let lap = Arc::new(laplacian_2d(m).expect("m >= 1"));
    QuadraticProblem {
        m,
        n,
        alpha,
        x_star: Vector::from_element(n, 1.0),
        d_diag,
        lap,
    }
}

impl QuadraticProblem {
    /// Dense Hessian `D + alpha S` (constant).
    pub fn hessian(&self) -> DMatrix<f64> {
        let mut h = self.lap.to_dense() * self.alpha;
        for i in 0..self.n {
            h[(i, i)] += self.d_diag[i];
        }
        h
    }

    pub fn into_problem(self) -> Problem {
        let QuadraticProblem {
            n,
            alpha,
            x_star,
            d_diag,
            lap,
            ..
        } = self;
        let reg: Arc<dyn LinearOperator> =
            Arc::new(ScaledOperator::new(alpha, ArcOp(Arc::clone(&lap))));
        let hess = {
            let mut h = lap.to_dense() * alpha;
            for i in 0..n {
                h[(i, i)] += d_diag[i];
            }
            h
        };
        let (xs1, xs2, xs3) = (x_star.clone(), x_star.clone(), x_star);
        let (d1, d2, d3) = (d_diag.clone(), d_diag.clone(), d_diag);
        let lap_eval = Arc::clone(&lap);
        let lap_grad = lap;
        Problem::new(
            n,
            move |x: &Vector| {
                let r = x - &xs1;
                0.5 * (r.dot(&r.component_mul(&d1)) + alpha * r.dot(&lap_eval.apply(&r)))
            },
            move |x: &Vector| {
                let r = x - &xs2;
                r.component_mul(&d2) + lap_grad.apply(&r) * alpha
            },
        )
        .with_data_gradient(move |x: &Vector| (x - &xs3).component_mul(&d3))
        .with_regularizer_hessian(move |_x: &Vector| Arc::clone(&reg))
        .with_dense_hessian(move |_x: &Vector| hess.clone())
    }
}

/// Adapter: a shared operator behaves as an operator itself.
struct ArcOp(Arc<Laplacian2d>);

impl LinearOperator for ArcOp {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, v: &Vector) -> Vector {
        self.0.apply(v)
    }

    fn diagonal(&self) -> Vector {
        self.0.diagonal()
    }
}

/// Non-convex data term plus quadratic Laplacian regularizer:
/// `D(x) = sum_i (1 - cos x_i) + gamma |P x|^2 / 2`,
/// `S(x) = alpha x' L x / 2`, minimum at `x* = 0`.
///
/// The cosine curvature changes sign away from the origin, so curvature
/// pairs with `y's <= 0` occur and the cautious storage rule is
/// exercised. The regularizer Hessian `alpha L` is constant and SPD.
pub struct NonconvexProblem {
    pub m: usize,
    pub n: usize,
    pub alpha: f64,
    pub gamma: f64,
    /// Low-rank factor, r-by-n.
    p: DMatrix<f64>,
    lap: Arc<Laplacian2d>,
    /// Random start, far enough from the origin to visit indefinite
    /// regions of the data term.
    pub x0: Vector,
}

pub fn make_nonconvex(m: usize, alpha: f64, seed: u64) -> Result<NonconvexProblem> {
    if m == 0 {
        return Err(Error::EmptyGrid);
    }
    let n = m * m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rank = 3.min(n);
    let p = DMatrix::from_fn(rank, n, |_, _| rng.gen_range(-1.0..1.0));
    let x0 = Vector::from_fn(n, |_, _| rng.gen_range(-6.0..6.0));
    Ok(NonconvexProblem {
        m,
        n,
        alpha,
        gamma: 0.05,
        p,
        lap: Arc::new(laplacian_2d(m)?),
        x0,
    })
}

impl NonconvexProblem {
    pub fn into_problem(self) -> Problem {
        let NonconvexProblem {
            n,
            alpha,
            gamma,
            p,
            lap,
            ..
        } = self;
        let reg: Arc<dyn LinearOperator> =
            Arc::new(ScaledOperator::new(alpha, ArcOp(Arc::clone(&lap))));
        let ptp = p.transpose() * &p;
        let (ptp_eval, ptp_grad, ptp_data) = (ptp.clone(), ptp.clone(), ptp);
        let p_eval = p;
        let lap_dense = lap.to_dense();
        let lap_eval = lap;
        let lap_grad = Arc::clone(&lap_eval);
        Problem::new(
            n,
            move |x: &Vector| {
                let cos_term: f64 = x.iter().map(|&xi| 1.0 - xi.cos()).sum();
                let px = &p_eval * x;
                cos_term + 0.5 * gamma * px.norm_squared() + 0.5 * alpha * x.dot(&lap_eval.apply(x))
            },
            move |x: &Vector| {
                x.map(f64::sin) + &ptp_grad * x * gamma + lap_grad.apply(x) * alpha
            },
        )
        .with_data_gradient(move |x: &Vector| x.map(f64::sin) + &ptp_data * x * gamma)
        .with_regularizer_hessian(move |_x: &Vector| Arc::clone(&reg))
        .with_dense_hessian(move |x: &Vector| {
            let mut h = &ptp_eval * gamma + &lap_dense * alpha;
            for i in 0..x.len() {
                h[(i, i)] += x[i].cos();
            }
            h
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::fd_gradient;
    use rand::Rng;

    #[test]
    fn quadratic_minimum_at_x_star() {
        let q = make_quadratic(4, 1e-1);
        let x_star = q.x_star.clone();
        let p = q.into_problem();
        assert_eq!(p.evaluate(&x_star), 0.0);
        assert_eq!(p.gradient(&x_star).norm(), 0.0);
    }

    #[test]
    fn quadratic_value_at_origin() {
        // J(0) = 1'(D + alpha S)1 / 2; 1'D1 = sum exp(-j), 1'S1 = sum of
        // Laplacian row sums.
        let m = 4;
        let alpha = 1e-1;
        let q = make_quadratic(m, alpha);
        let ones = Vector::from_element(16, 1.0);
        let d_sum: f64 = (1..=16).map(|j| (-(j as f64)).exp()).sum();
        let lap = laplacian_2d(m).unwrap();
        let s_sum = ones.dot(&lap.apply(&ones));
        let p = q.into_problem();
        let want = 0.5 * (d_sum + alpha * s_sum);
        assert!((p.evaluate(&Vector::zeros(16)) - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn quadratic_dense_hessian_matches_parts() {
        let q = make_quadratic(3, 1e-3);
        let h = q.hessian();
        let lap = laplacian_2d(3).unwrap().to_dense();
        for i in 0..9 {
            for j in 0..9 {
                let mut want = 1e-3 * lap[(i, j)];
                if i == j {
                    want += (-((i + 1) as f64)).exp();
                }
                assert_eq!(h[(i, j)], want);
            }
        }
        let p = q.into_problem();
        let x = Vector::from_fn(9, |i, _| i as f64 * 0.1);
        assert_eq!(p.dense_hessian(&x).unwrap(), h);
    }

    #[test]
    fn quadratic_gradient_matches_finite_differences() {
        let q = make_quadratic(4, 1e-1).into_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let x = Vector::from_fn(16, |_, _| rng.gen_range(-2.0..2.0));
            let g = q.gradient(&x);
            let fd = fd_gradient(|v| q.evaluate(v), &x, 1e-6);
            assert!((&g - &fd).norm() <= 1e-6 * g.norm().max(1.0));
        }
    }

    #[test]
    fn quadratic_gradient_is_hessian_times_residual() {
        let q = make_quadratic(4, 1e-3);
        let h = q.hessian();
        let x_star = q.x_star.clone();
        let p = q.into_problem();
        let x = Vector::from_fn(16, |i, _| (i as f64).sin());
        let want = &h * (&x - &x_star);
        assert!((p.gradient(&x) - want).norm() <= 1e-13);
    }

    #[test]
    fn quadratic_shortcut_consistency() {
        // z via data-gradient difference equals y - S s for the constant
        // quadratic regularizer.
        let q = make_quadratic(4, 1e-1).into_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = Vector::from_fn(16, |_, _| rng.gen_range(-2.0..2.0));
            let xn = Vector::from_fn(16, |_, _| rng.gen_range(-2.0..2.0));
            let s = &xn - &x;
            let y = q.gradient(&xn) - q.gradient(&x);
            let z_op = &y - q.regularizer_hessian(&xn).apply(&s);
            let z_sc = q.data_gradient(&xn).unwrap() - q.data_gradient(&x).unwrap();
            assert!((&z_op - &z_sc).norm() <= 1e-12 * z_op.norm().max(1e-30));
        }
    }

    #[test]
    fn nonconvex_minimum_at_origin() {
        let p = make_nonconvex(4, 1e-3, 7).unwrap().into_problem();
        let zero = Vector::zeros(16);
        assert_eq!(p.evaluate(&zero), 0.0);
        assert_eq!(p.gradient(&zero).norm(), 0.0);
    }

    #[test]
    fn nonconvex_deterministic_in_seed() {
        let a = make_nonconvex(3, 1e-3, 11).unwrap();
        let b = make_nonconvex(3, 1e-3, 11).unwrap();
        assert_eq!(a.x0, b.x0);
        assert_eq!(a.p, b.p);
        let c = make_nonconvex(3, 1e-3, 12).unwrap();
        assert_ne!(a.x0, c.x0);
    }

    #[test]
    fn nonconvex_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = make_nonconvex(4, 1e-3, 5).unwrap().into_problem();
        for _ in 0..20 {
            let x = Vector::from_fn(16, |_, _| rng.gen_range(-6.0..6.0));
            let g = p.gradient(&x);
            let fd = fd_gradient(|v| p.evaluate(v), &x, 1e-6);
            assert!(
                (&g - &fd).norm() <= 1e-5 * g.norm().max(1.0),
                "fd mismatch: {}",
                (&g - &fd).norm()
            );
        }
    }

    #[test]
    fn nonconvex_data_term_is_indefinite_away_from_minimum() {
        // v' D''(x) v < 0 at x = pi * ones along a coordinate direction,
        // certified by finite differences of the data gradient.
        let problem = make_nonconvex(4, 1e-3, 5).unwrap();
        let gamma = problem.gamma;
        let p = problem.into_problem();
        let x = Vector::from_element(16, std::f64::consts::PI);
        let mut v = Vector::zeros(16);
        v[0] = 1.0;
        let h = 1e-5;
        let gp = p.data_gradient(&(&x + &v * h)).unwrap();
        let gm = p.data_gradient(&(&x - &v * h)).unwrap();
        let curvature = (gp - gm).dot(&v) / (2.0 * h);
        // cos(pi) = -1 dominates the small low-rank gamma term
        assert!(curvature < -1.0 + 16.0 * gamma, "curvature = {curvature}");
        assert!(curvature < 0.0);
    }

    #[test]
    fn nonconvex_bounded_below_sampled() {
        let p = make_nonconvex(4, 1e-3, 2).unwrap().into_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let x = Vector::from_fn(16, |_, _| rng.gen_range(-20.0..20.0));
            assert!(p.evaluate(&x) >= 0.0);
        }
    }
}
