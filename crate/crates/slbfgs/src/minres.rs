//! Jacobi-preconditioned MINRES for the seed systems `(tau I + S) r = q`.
//!
//! Standard Paige--Saunders formulation applied to the symmetrically
//! scaled system `D^-1/2 A D^-1/2 x_hat = D^-1/2 b` with `D = diag(A)`.
//! Early stopping on the relative residual of the scaled system; the
//! reported statistics carry the true relative residual `|b - Ax|/|b|`.

use crate::error::{Error, Result};
use crate::linalg::{LinearOperator, Vector};

/// Outcome of one linear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solve `op x = rhs` for symmetric `op` with strictly positive diagonal.
///
/// Stops once the preconditioned relative residual drops to `tol` or
/// after `maxiter` iterations, whichever comes first. A Lanczos breakdown
/// means the Krylov space is exhausted and is treated as convergence of
/// the subspace. Deterministic: identical inputs give identical iterates.
pub fn pminres(
    op: &dyn LinearOperator,
    rhs: &Vector,
    maxiter: usize,
    tol: f64,
    x0: Option<&Vector>,
) -> Result<(Vector, SolveStats)> {
    let n = op.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch(rhs.len(), n));
    }
    let diag = op.diagonal();
    for (i, &d) in diag.iter().enumerate() {
        if d <= 0.0 {
            return Err(Error::NonPositiveDiagonal { index: i, value: d });
        }
    }
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return Ok((
            Vector::zeros(n),
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        ));
    }

    let d_isqrt = diag.map(|d| d.sqrt().recip());
    let d_sqrt = diag.map(f64::sqrt);
    // scaled operator: v -> D^-1/2 A D^-1/2 v
    let apply_scaled = |v: &Vector| -> Vector {
        op.apply(&v.component_mul(&d_isqrt)).component_mul(&d_isqrt)
    };

    // x_hat solves the scaled system; x = D^-1/2 x_hat.
    let mut x_hat = match x0 {
        Some(x0) => x0.component_mul(&d_sqrt),
        None => Vector::zeros(n),
    };
    let b_hat = rhs.component_mul(&d_isqrt);
    let r0 = if x0.is_some() {
        &b_hat - apply_scaled(&x_hat)
    } else {
        b_hat.clone()
    };
    let b_hat_norm = b_hat.norm();
    let r0_norm = r0.norm();

    let true_rel_res = |x_hat: &Vector| -> f64 {
        let x = x_hat.component_mul(&d_isqrt);
        (rhs - op.apply(&x)).norm() / rhs_norm
    };

    if r0_norm == 0.0 {
        let rel = true_rel_res(&x_hat);
        let x = x_hat.component_mul(&d_isqrt);
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                relative_residual: rel,
                converged: rel <= tol,
            },
        ));
    }

    // Lanczos vectors and Givens-rotation recurrences.
    let mut v_prev = Vector::zeros(n);
    let mut v = &r0 / r0_norm;
    let mut beta = r0_norm;
    let mut eta = beta;
    let (mut c_prev, mut c) = (1.0f64, 1.0f64);
    let (mut s_prev, mut s) = (0.0f64, 0.0f64);
    let mut w_prev = Vector::zeros(n);
    let mut w = Vector::zeros(n);
    let mut res_est = beta;
    let mut iterations = 0;

    for _ in 0..maxiter {
        if res_est <= tol * b_hat_norm {
            break;
        }
        iterations += 1;

        let mut av = apply_scaled(&v);
        let alpha = v.dot(&av);
        av.axpy(-alpha, &v, 1.0);
        av.axpy(-beta, &v_prev, 1.0);
        let beta_next = av.norm();

        // QR update of the tridiagonal via two previous rotations
        let delta = c * alpha - c_prev * s * beta;
        let gamma2 = s * alpha + c_prev * c * beta;
        let gamma3 = s_prev * beta;
        let gamma1 = (delta * delta + beta_next * beta_next).sqrt();

        if gamma1 == 0.0 {
            // exact breakdown: Krylov space is invariant
            break;
        }

        let c_next = delta / gamma1;
        let s_next = beta_next / gamma1;

        let mut w_next = v.clone();
        w_next.axpy(-gamma3, &w_prev, 1.0);
        w_next.axpy(-gamma2, &w, 1.0);
        w_next /= gamma1;

        x_hat.axpy(c_next * eta, &w_next, 1.0);
        res_est *= s_next.abs();
        eta *= -s_next;

        if beta_next == 0.0 {
            break;
        }
        v_prev = std::mem::replace(&mut v, &av / beta_next);
        beta = beta_next;
        (c_prev, c) = (c, c_next);
        (s_prev, s) = (s, s_next);
        w_prev = std::mem::replace(&mut w, w_next);
    }

    let rel = true_rel_res(&x_hat);
    let x = x_hat.component_mul(&d_isqrt);
    Ok((
        x,
        SolveStats {
            iterations,
            relative_residual: rel,
            converged: rel <= tol,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{laplacian_2d, DenseOperator, DiagonalOperator, ShiftedOperator};
    use crate::test_util::{random_spd, random_vector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_system_converges_in_one_step() {
        let op = DiagonalOperator::new(Vector::from_element(2, 1.0));
        let rhs = Vector::from_vec(vec![3.0, 4.0]);
        let (x, stats) = pminres(&op, &rhs, 10, 1e-2, None).unwrap();
        assert!(stats.converged && stats.iterations <= 1);
        assert!((x - rhs).norm() < 1e-12);
    }

    #[test]
    fn jacobi_makes_diagonal_systems_trivial() {
        let op = DiagonalOperator::new(Vector::from_vec(vec![1.0, 2.0, 4.0]));
        let rhs = Vector::from_element(3, 1.0);
        let (x, stats) = pminres(&op, &rhs, 30, 1e-10, None).unwrap();
        assert!(stats.converged && stats.iterations <= 1);
        let want = Vector::from_vec(vec![1.0, 0.5, 0.25]);
        assert!((x - want).norm() < 1e-10);
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let op = DiagonalOperator::new(Vector::from_vec(vec![1.0, 2.0]));
        let (x, stats) = pminres(&op, &Vector::zeros(2), 10, 1e-10, None).unwrap();
        assert_eq!(x, Vector::zeros(2));
        assert_eq!(stats.iterations, 0);
        assert!(stats.converged);
    }

    #[test]
    fn rejects_nonpositive_diagonal() {
        let op = DiagonalOperator::new(Vector::from_vec(vec![1.0, -2.0]));
        let r = pminres(&op, &Vector::from_element(2, 1.0), 10, 1e-10, None);
        assert!(matches!(r, Err(Error::NonPositiveDiagonal { index: 1, .. })));
    }

    #[test]
    fn shifted_laplacian_operating_point() {
        let lap = laplacian_2d(4).unwrap();
        let op = ShiftedOperator::new(0.1, &lap);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let rhs = random_vector(&mut rng, 16);
            let (x, stats) = pminres(&op, &rhs, 50, 1e-2, None).unwrap();
            assert!(stats.converged, "stats: {stats:?}");
            assert!(stats.relative_residual <= 1e-2);
            // against a dense direct solve
            let dense = op.to_dense();
            let want = dense.lu().solve(&rhs).unwrap();
            let (x_tight, _) = pminres(&op, &rhs, 160, 1e-12, None).unwrap();
            assert!((&x_tight - &want).norm() <= 1e-8 * want.norm());
            assert!(x.len() == 16);
        }
    }

    #[test]
    fn agrees_with_dense_solve_on_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let n = rng.gen_range(2..=64);
            let a = random_spd(&mut rng, n);
            let op = DenseOperator::new(a.clone());
            let rhs = random_vector(&mut rng, n);
            if rhs.norm() == 0.0 {
                continue;
            }
            let (x, stats) = pminres(&op, &rhs, 10 * n, 1e-12, None).unwrap();
            let want = a.lu().solve(&rhs).unwrap();
            assert!(
                (&x - &want).norm() <= 1e-8 * want.norm(),
                "n={n} stats={stats:?}"
            );
        }
    }

    #[test]
    fn residual_monotone_in_iteration_budget() {
        let lap = laplacian_2d(5).unwrap();
        let op = ShiftedOperator::new(0.01, &lap);
        let rhs = random_vector(&mut ChaCha8Rng::seed_from_u64(5), 25);
        let d_isqrt = op.diagonal().map(|d: f64| d.sqrt().recip());
        let mut prev = f64::INFINITY;
        // up to n = 25 iterations the Krylov space still grows; beyond
        // that only roundoff noise remains
        for maxiter in 1..=25 {
            // tol 0 forces exactly `maxiter` iterations
            let (x, _) = pminres(&op, &rhs, maxiter, 0.0, None).unwrap();
            let pre_res = (&rhs - op.apply(&x)).component_mul(&d_isqrt).norm();
            assert!(pre_res <= prev * (1.0 + 1e-10) + 1e-13 * rhs.norm());
            prev = pre_res;
        }
    }

    #[test]
    fn warm_start_is_used() {
        let lap = laplacian_2d(3).unwrap();
        let op = ShiftedOperator::new(1.0, &lap);
        let rhs = random_vector(&mut ChaCha8Rng::seed_from_u64(6), 9);
        let exact = op.to_dense().lu().solve(&rhs).unwrap();
        let (_, stats) = pminres(&op, &rhs, 100, 1e-10, Some(&exact)).unwrap();
        assert!(stats.converged && stats.iterations == 0);
    }

    #[test]
    fn deterministic_iterates() {
        let lap = laplacian_2d(4).unwrap();
        let op = ShiftedOperator::new(0.5, &lap);
        let rhs = random_vector(&mut ChaCha8Rng::seed_from_u64(7), 16);
        let (x1, s1) = pminres(&op, &rhs, 25, 1e-9, None).unwrap();
        let (x2, s2) = pminres(&op, &rhs, 25, 1e-9, None).unwrap();
        assert_eq!(x1, x2);
        assert_eq!(s1, s2);
    }
}
