//! Vectors, symmetric linear operators and a dense full-matrix BFGS
//! reference recursion.
//!
//! Operators are matrix-free: they expose `apply` (matrix-vector product)
//! and `diagonal` (needed for Jacobi preconditioning of the seed systems).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense column vector over f64.
pub type Vector = DVector<f64>;

/// Symmetric bounded linear operator on R^n.
///
/// Implementations must be deterministic and side-effect free; they are
/// shared read-only across optimizer runs.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// Matrix-vector product `A v`.
    fn apply(&self, v: &Vector) -> Vector;

    /// The diagonal of the operator, `diag(A)`.
    fn diagonal(&self) -> Vector;

    /// True for the zero operator; lets seed solves skip the linear system.
    fn is_zero(&self) -> bool {
        false
    }

    /// Materialize the operator as a dense matrix (tests and diagnostics).
    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = Vector::zeros(n);
            e[j] = 1.0;
            a.set_column(j, &self.apply(&e));
        }
        a
    }
}

/// Euclidean inner product.
pub fn dot(u: &Vector, v: &Vector) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(u.len(), v.len()));
    }
    Ok(u.dot(v))
}

/// The zero operator on R^n.
pub struct ZeroOperator {
    n: usize,
}

impl ZeroOperator {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl LinearOperator for ZeroOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, v: &Vector) -> Vector {
        Vector::zeros(v.len())
    }

    fn diagonal(&self) -> Vector {
        Vector::zeros(self.n)
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// Symmetric operator backed by a dense matrix.
pub struct DenseOperator {
    a: DMatrix<f64>,
}

impl DenseOperator {
    /// The matrix is taken as-is; callers are responsible for symmetry.
    pub fn new(a: DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        Self { a }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn apply(&self, v: &Vector) -> Vector {
        &self.a * v
    }

    fn diagonal(&self) -> Vector {
        self.a.diagonal()
    }
}

/// Diagonal operator `diag(d)`.
pub struct DiagonalOperator {
    d: Vector,
}

impl DiagonalOperator {
    pub fn new(d: Vector) -> Self {
        Self { d }
    }
}

impl LinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.d.len()
    }

    fn apply(&self, v: &Vector) -> Vector {
        v.component_mul(&self.d)
    }

    fn diagonal(&self) -> Vector {
        self.d.clone()
    }
}

/// `alpha * A` for a shared inner operator.
pub struct ScaledOperator<A> {
    alpha: f64,
    inner: A,
}

impl<A: LinearOperator> ScaledOperator<A> {
    pub fn new(alpha: f64, inner: A) -> Self {
        Self { alpha, inner }
    }
}

impl<A: LinearOperator> LinearOperator for ScaledOperator<A> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, v: &Vector) -> Vector {
        self.inner.apply(v) * self.alpha
    }

    fn diagonal(&self) -> Vector {
        self.inner.diagonal() * self.alpha
    }

    fn is_zero(&self) -> bool {
        self.alpha == 0.0 || self.inner.is_zero()
    }
}

/// `tau * I + S`, the structured seed matrix.
pub struct ShiftedOperator<'a> {
    tau: f64,
    s: &'a dyn LinearOperator,
}

impl<'a> ShiftedOperator<'a> {
    pub fn new(tau: f64, s: &'a dyn LinearOperator) -> Self {
        Self { tau, s }
    }
}

impl LinearOperator for ShiftedOperator<'_> {
    fn dim(&self) -> usize {
        self.s.dim()
    }

    fn apply(&self, v: &Vector) -> Vector {
        self.s.apply(v) + v * self.tau
    }

    fn diagonal(&self) -> Vector {
        self.s.diagonal().add_scalar(self.tau)
    }

    fn is_zero(&self) -> bool {
        self.tau == 0.0 && self.s.is_zero()
    }
}

/// Negative Laplacian on an m-by-m grid of interior points of the unit
/// square, five-point stencil, zero Dirichlet boundary. The stencil is
/// unscaled: diagonal 4, grid neighbors -1. SPD with eigenvalues
/// `4 - 2cos(i pi/(m+1)) - 2cos(j pi/(m+1))`.
pub struct Laplacian2d {
    m: usize,
}

impl Laplacian2d {
    pub fn grid(&self) -> usize {
        self.m
    }
}

pub fn laplacian_2d(m: usize) -> Result<Laplacian2d> {
    if m == 0 {
        return Err(Error::EmptyGrid);
    }
    Ok(Laplacian2d { m })
}

impl LinearOperator for Laplacian2d {
    fn dim(&self) -> usize {
        self.m * self.m
    }

    fn apply(&self, v: &Vector) -> Vector {
        let m = self.m;
        assert_eq!(v.len(), m * m);
        let mut out = Vector::zeros(m * m);
        for i in 0..m {
            for j in 0..m {
                let idx = i * m + j;
                let mut acc = 4.0 * v[idx];
                if i > 0 {
                    acc -= v[idx - m];
                }
                if i + 1 < m {
                    acc -= v[idx + m];
                }
                if j > 0 {
                    acc -= v[idx - 1];
                }
                if j + 1 < m {
                    acc -= v[idx + 1];
                }
                out[idx] = acc;
            }
        }
        out
    }

    fn diagonal(&self) -> Vector {
        Vector::from_element(self.m * self.m, 4.0)
    }
}

/// Dense BFGS recursion `B^(j+1) = B^(j) + y y'/y's - B s s' B/(s' B s)`.
///
/// Reference path for tests and diagnostics only; the optimizer never
/// materializes B. Requires an SPD seed and `y's > 0` for every pair.
pub fn dense_bfgs_oracle(seed: &DMatrix<f64>, pairs: &[(Vector, Vector)]) -> Result<DMatrix<f64>> {
    let n = seed.nrows();
    assert_eq!(seed.ncols(), n);
    let mut b = seed.clone();
    for (s, y) in pairs {
        if s.len() != n {
            return Err(Error::DimensionMismatch(s.len(), n));
        }
        let rho = y.dot(s);
        if rho <= 0.0 {
            return Err(Error::NonPositiveCurvature(rho));
        }
        let bs = &b * s;
        let sbs = s.dot(&bs);
        // sbs = 0 cannot occur while B stays SPD.
        assert!(sbs > 0.0, "s'Bs = {sbs} although the seed is SPD");
        b += y * y.transpose() / rho - &bs * bs.transpose() / sbs;
    }
    Ok(b)
}
