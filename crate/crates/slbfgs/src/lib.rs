//! Limited-memory quasi-Newton optimization with structured seed
//! matrices.
//!
//! The crate provides two drivers: classical inverse L-BFGS with
//! Barzilai–Borwein-scaled identity seeds, and a structured variant whose
//! seed `tau_k I + S_k` carries the (cheap, SPD) regularizer Hessian of a
//! split objective `J = D + S`. Supporting pieces: cautious update-pair
//! storage, secant-derived scaling factors with safeguards, an adaptive
//! scaling controller, a Jacobi-preconditioned MINRES inner solver, and a
//! benchmark harness with CSV traces and performance profiles.

pub mod error;
pub mod linalg;
pub mod linesearch;
pub mod memory;
pub mod minres;
pub mod optimizer;
pub mod problems;
pub mod profile;
pub mod scaling;
pub mod suite;

#[cfg(test)]
pub(crate) mod test_util;

pub use error::{Error, Result};
pub use linalg::{laplacian_2d, LinearOperator, Vector};
pub use memory::{Memory, SeedSolve};
pub use minres::{pminres, SolveStats};
pub use optimizer::{
    lbfgs_minimize, slbfgs_minimize, OptimizerConfig, Problem, RunResult, Status, Strategy,
};
