//! Update-pair storage with cautious acceptance and the two-loop
//! recursion, in inverse (H) form with the seed applied as a solve at
//! the midpoint.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{LinearOperator, ShiftedOperator, Vector};
use crate::minres::{pminres, SolveStats};

/// One accepted correction pair with cached inner products.
#[derive(Debug, Clone)]
pub struct UpdatePair {
    pub s: Vector,
    pub y: Vector,
    /// y's, positive for every stored pair.
    pub rho: f64,
    pub s_norm_sq: f64,
}

/// Bounded FIFO of correction pairs, oldest first. `capacity: None`
/// keeps every accepted pair (the `l = inf` mode).
#[derive(Debug, Clone)]
pub struct Memory {
    capacity: Option<usize>,
    pairs: VecDeque<UpdatePair>,
}

impl Memory {
    pub fn new(capacity: Option<usize>) -> Self {
        Self {
            capacity,
            pairs: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &UpdatePair> {
        self.pairs.iter()
    }

    /// Cautious storage: append `(s, y)` iff `y's > c_s |s|^2`, evicting
    /// the oldest pair when the capacity is exceeded. Returns whether the
    /// pair was accepted.
    pub fn try_store(&mut self, s: Vector, y: Vector, c_s: f64) -> Result<bool> {
        let s_norm_sq = s.norm_squared();
        if s_norm_sq == 0.0 {
            return Err(Error::ZeroStep);
        }
        let rho = y.dot(&s);
        if rho <= c_s * s_norm_sq {
            return Ok(false);
        }
        self.pairs.push_back(UpdatePair {
            s,
            y,
            rho,
            s_norm_sq,
        });
        if let Some(cap) = self.capacity {
            while self.pairs.len() > cap {
                self.pairs.pop_front();
            }
        }
        Ok(true)
    }
}

/// How to solve the seed system `(tau I + S) r = q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedSolve {
    /// Dense Cholesky factorization, exact up to roundoff.
    Exact,
    /// Jacobi-preconditioned MINRES with early stopping.
    Iterative { maxiter: usize, tol: f64 },
}

/// Application of the inverse seed `H^(0) = (B^(0))^-1` at the midpoint
/// of the two-loop recursion.
pub enum SeedApplier {
    /// Classical seed `H^(0) = tau_hat I`.
    IdentityScaled { tau_hat: f64 },
    /// Structured seed `B^(0) = tau I + S`, applied by solving.
    Structured {
        tau: f64,
        s_op: Arc<dyn LinearOperator>,
        solve: SeedSolve,
    },
}

impl SeedApplier {
    /// Compute `r = H^(0) q`. Solve statistics are returned for the
    /// iterative path; failure to reach the tolerance is reported there,
    /// not as an error.
    pub fn apply_inverse(&self, q: &Vector) -> Result<(Vector, Option<SolveStats>)> {
        match self {
            SeedApplier::IdentityScaled { tau_hat } => Ok((q * *tau_hat, None)),
            SeedApplier::Structured { tau, s_op, solve } => {
                if s_op.is_zero() {
                    return Ok((q / *tau, None));
                }
                let seed = ShiftedOperator::new(*tau, s_op.as_ref());
                match solve {
                    SeedSolve::Exact => {
                        let dense = seed.to_dense();
                        let chol = dense
                            .cholesky()
                            .expect("structured seed must be SPD for exact solves");
                        Ok((chol.solve(q), None))
                    }
                    SeedSolve::Iterative { maxiter, tol } => {
                        let (r, stats) = pminres(&seed, q, *maxiter, *tol, None)?;
                        Ok((r, Some(stats)))
                    }
                }
            }
        }
    }
}

/// Two-loop recursion: `d = -H_k grad` built from the stored pairs and
/// the seed, cf. the inverse L-BFGS operator.
pub fn two_loop(
    grad: &Vector,
    mem: &Memory,
    seed: &SeedApplier,
) -> Result<(Vector, Option<SolveStats>)> {
    let mut q = grad.clone();
    let mut alphas = vec![0.0; mem.len()];
    for (i, pair) in mem.pairs.iter().enumerate().rev() {
        let alpha = pair.s.dot(&q) / pair.rho;
        q.axpy(-alpha, &pair.y, 1.0);
        alphas[i] = alpha;
    }
    let (mut r, stats) = seed.apply_inverse(&q)?;
    for (i, pair) in mem.pairs.iter().enumerate() {
        let beta = pair.y.dot(&r) / pair.rho;
        r.axpy(alphas[i] - beta, &pair.s, 1.0);
    }
    Ok((-r, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dense_bfgs_oracle, DenseOperator, ZeroOperator};
    use crate::test_util::{random_spd, random_vector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vec2(a: f64, b: f64) -> Vector {
        Vector::from_vec(vec![a, b])
    }

    #[test]
    fn store_accepts_positive_curvature() {
        let mut mem = Memory::new(Some(5));
        assert!(mem
            .try_store(vec2(1.0, 0.0), vec2(1.0, 0.0), 1e-9)
            .unwrap());
        assert_eq!(mem.len(), 1);
    }

    #[test]
    fn store_rejects_negative_curvature() {
        let mut mem = Memory::new(Some(5));
        assert!(!mem
            .try_store(vec2(1.0, 0.0), vec2(-1.0, 0.0), 1e-9)
            .unwrap());
        assert!(mem.is_empty());
    }

    #[test]
    fn store_rejects_boundary_curvature() {
        let mut mem = Memory::new(Some(5));
        // rho = 5e-10 <= c_s |s|^2 = 1e-9
        assert!(!mem
            .try_store(vec2(1.0, 0.0), vec2(5e-10, 0.0), 1e-9)
            .unwrap());
    }

    #[test]
    fn store_rejects_zero_step() {
        let mut mem = Memory::new(Some(5));
        assert!(mem.try_store(vec2(0.0, 0.0), vec2(1.0, 0.0), 1e-9).is_err());
    }

    #[test]
    fn eviction_keeps_newest() {
        let ell = 3;
        let mut mem = Memory::new(Some(ell));
        for k in 0..ell + 1 {
            let s = vec2(1.0 + k as f64, 0.0);
            let y = s.clone();
            assert!(mem.try_store(s, y, 0.0).unwrap());
        }
        assert_eq!(mem.len(), ell);
        let firsts: Vec<f64> = mem.pairs().map(|p| p.s[0]).collect();
        assert_eq!(firsts, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn unbounded_memory_keeps_everything() {
        let mut mem = Memory::new(None);
        for k in 0..50 {
            mem.try_store(vec2(1.0, k as f64), vec2(1.0, k as f64), 0.0)
                .unwrap();
        }
        assert_eq!(mem.len(), 50);
    }

    #[test]
    fn empty_memory_structured_seed() {
        let mem = Memory::new(Some(5));
        let seed = SeedApplier::Structured {
            tau: 2.0,
            s_op: Arc::new(ZeroOperator::new(2)),
            solve: SeedSolve::Exact,
        };
        let (d, _) = two_loop(&vec2(4.0, 2.0), &mem, &seed).unwrap();
        assert_eq!(d, vec2(-2.0, -1.0));
    }

    #[test]
    fn empty_memory_identity_seed_matches_structured() {
        let mem = Memory::new(Some(5));
        let seed = SeedApplier::IdentityScaled { tau_hat: 0.5 };
        let (d, _) = two_loop(&vec2(4.0, 2.0), &mem, &seed).unwrap();
        assert_eq!(d, vec2(-2.0, -1.0));
    }

    #[test]
    fn one_pair_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.gen_range(2..=6);
            let seed_mat = random_spd(&mut rng, n);
            let mut mem = Memory::new(Some(5));
            loop {
                let s = random_vector(&mut rng, n);
                let y = random_vector(&mut rng, n);
                if s.norm() > 1e-3 && y.dot(&s) > 1e-6 {
                    mem.try_store(s, y, 0.0).unwrap();
                    break;
                }
            }
            let pairs: Vec<_> = mem.pairs().map(|p| (p.s.clone(), p.y.clone())).collect();
            let b = dense_bfgs_oracle(&seed_mat, &pairs).unwrap();
            let g = random_vector(&mut rng, n);
            let seed = SeedApplier::Structured {
                tau: 0.0,
                s_op: Arc::new(DenseOperator::new(seed_mat)),
                solve: SeedSolve::Exact,
            };
            let (d, _) = two_loop(&g, &mem, &seed).unwrap();
            let want = -b.clone().lu().solve(&g).unwrap();
            assert!((&d - &want).norm() <= 1e-10 * want.norm());
        }
    }

    #[test]
    fn directions_are_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let n = rng.gen_range(2..=10);
            let mut mem = Memory::new(Some(4));
            for _ in 0..rng.gen_range(0..=4) {
                let s = random_vector(&mut rng, n);
                let y = random_vector(&mut rng, n);
                if s.norm() > 1e-3 && y.dot(&s) > 1e-6 {
                    mem.try_store(s, y, 0.0).unwrap();
                }
            }
            let seed = SeedApplier::Structured {
                tau: 0.1,
                s_op: Arc::new(DenseOperator::new(random_spd(&mut rng, n))),
                solve: SeedSolve::Exact,
            };
            let g = random_vector(&mut rng, n);
            if g.norm() < 1e-6 {
                continue;
            }
            let (d, _) = two_loop(&g, &mem, &seed).unwrap();
            assert!(g.dot(&d) < 0.0);
        }
    }

    // Lemma-style norm bounds of the dense recursion, checked on random
    // instances with kappa_1, kappa_2 derived from the pairs.
    #[test]
    fn oracle_norm_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let n = rng.gen_range(2..=8);
            let m = rng.gen_range(0..=4usize);
            let seed = random_spd(&mut rng, n);
            let mut pairs = Vec::new();
            while pairs.len() < m {
                let s = random_vector(&mut rng, n);
                let y = random_vector(&mut rng, n);
                if s.norm() > 1e-2 && y.norm() > 1e-2 && y.dot(&s) > 1e-4 {
                    pairs.push((s, y));
                }
            }
            let (mut kappa1, mut kappa2) = (1.0f64, 1.0f64);
            for (s, y) in &pairs {
                let rho = y.dot(s);
                kappa1 = kappa1.max(s.norm_squared() / rho);
                kappa2 = kappa2.max(y.norm_squared() / rho);
            }
            let b = dense_bfgs_oracle(&seed, &pairs).unwrap();
            let norm = |m: &nalgebra::DMatrix<f64>| {
                m.clone()
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .fold(0.0f64, |a, &e| a.max(e.abs()))
            };
            let b_inv = b.clone().try_inverse().unwrap();
            let seed_inv = seed.clone().try_inverse().unwrap();
            let mf = m as f64;
            assert!(norm(&b) <= norm(&seed) + mf * kappa2 + 1e-9);
            let bound = 5f64.powf(mf)
                * norm(&seed_inv).max(1.0)
                * kappa1.powf(mf).max((kappa1 * kappa2).powf(mf)).max(1.0);
            assert!(norm(&b_inv) <= bound + 1e-9);
        }
    }
}
