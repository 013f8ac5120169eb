//! C ABI for the slbfgs optimizers.
//!
//! All functions return an `SlbfgsStatusCode`; results travel through
//! opaque handles and out-pointers. Handles must be released with the
//! matching `_free` function. No function panics across the boundary.

// Entry points stay non-`unsafe` so cbindgen emits plain C prototypes;
// every raw pointer is null-checked before use and the remaining safety
// contract (valid, correctly sized buffers) is documented per function.
#![allow(clippy::not_unsafe_ptr_arg_deref)]

use std::ffi::{c_char, c_void, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use slbfgs::linesearch::LineSearchKind;
use slbfgs::optimizer::StoppingRule;
use slbfgs::problems::{make_nonconvex, make_quadratic};
use slbfgs::suite::run_strategy;
use slbfgs::{OptimizerConfig, Problem, RunResult, Status, Strategy, Vector};

/// Return codes of every FFI entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlbfgsStatusCode {
    SlbfgsOk = 0,
    SlbfgsNullPointer = 1,
    SlbfgsInvalidArgument = 2,
    SlbfgsDimensionMismatch = 3,
    SlbfgsRuntimeError = 4,
    SlbfgsInternalPanic = 5,
}

use SlbfgsStatusCode::*;

/// Why a run ended, mirrored as stable integers.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlbfgsRunStatus {
    SlbfgsConvergedGradTol = 0,
    SlbfgsConvergedFairTriple = 1,
    SlbfgsMaxIterations = 2,
    SlbfgsLineSearchFailed = 3,
    SlbfgsNonFinite = 4,
}

/// Opaque problem handle.
pub struct SlbfgsProblem {
    inner: Problem,
    /// Suggested start, kept for the built-in generators.
    x0: Vector,
}

/// Opaque solver configuration handle.
pub struct SlbfgsConfig {
    inner: OptimizerConfig,
}

/// Opaque result handle.
pub struct SlbfgsResult {
    inner: RunResult,
}

/// Objective callback: `f(x, n, user_data) -> J(x)`. Nullable; a null
/// callback is rejected with `SLBFGS_NULL_POINTER`.
pub type SlbfgsObjectiveFn =
    Option<unsafe extern "C" fn(x: *const f64, n: usize, user_data: *mut c_void) -> f64>;

/// Gradient callback: writes `grad J(x)` into `out` (length `n`).
/// Nullable; a null callback is rejected with `SLBFGS_NULL_POINTER`.
pub type SlbfgsGradientFn =
    Option<unsafe extern "C" fn(x: *const f64, n: usize, out: *mut f64, user_data: *mut c_void)>;

struct Callbacks {
    eval: unsafe extern "C" fn(*const f64, usize, *mut c_void) -> f64,
    grad: unsafe extern "C" fn(*const f64, usize, *mut f64, *mut c_void),
    user_data: *mut c_void,
}

// The caller promises the callbacks and user_data are safe to invoke
// from the thread that drives the solver.
unsafe impl Send for Callbacks {}
unsafe impl Sync for Callbacks {}

fn guard<F: FnOnce() -> SlbfgsStatusCode>(f: F) -> SlbfgsStatusCode {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(SlbfgsInternalPanic)
}

/// Create the built-in structured quadratic benchmark problem on an
/// m-by-m grid. Writes the handle to `out`.
#[no_mangle]
pub extern "C" fn slbfgs_problem_quadratic(
    m: usize,
    alpha: f64,
    out: *mut *mut SlbfgsProblem,
) -> SlbfgsStatusCode {
    guard(|| {
        if out.is_null() {
            return SlbfgsNullPointer;
        }
        if m == 0 || alpha.is_nan() || alpha <= 0.0 {
            return SlbfgsInvalidArgument;
        }
        let q = make_quadratic(m, alpha);
        let n = q.n;
        let handle = Box::new(SlbfgsProblem {
            inner: q.into_problem(),
            x0: Vector::zeros(n),
        });
        unsafe { *out = Box::into_raw(handle) };
        SlbfgsOk
    })
}

/// Create the built-in smooth non-convex problem (deterministic in
/// `seed`).
#[no_mangle]
pub extern "C" fn slbfgs_problem_nonconvex(
    m: usize,
    alpha: f64,
    seed: u64,
    out: *mut *mut SlbfgsProblem,
) -> SlbfgsStatusCode {
    guard(|| {
        if out.is_null() {
            return SlbfgsNullPointer;
        }
        let Ok(p) = make_nonconvex(m, alpha, seed) else {
            return SlbfgsInvalidArgument;
        };
        let x0 = p.x0.clone();
        let handle = Box::new(SlbfgsProblem {
            inner: p.into_problem(),
            x0,
        });
        unsafe { *out = Box::into_raw(handle) };
        SlbfgsOk
    })
}

/// Create a problem from user callbacks. `user_data` is passed through
/// unchanged; it must stay valid until the problem is freed.
#[no_mangle]
pub extern "C" fn slbfgs_problem_callbacks(
    dimension: usize,
    eval: SlbfgsObjectiveFn,
    grad: SlbfgsGradientFn,
    user_data: *mut c_void,
    out: *mut *mut SlbfgsProblem,
) -> SlbfgsStatusCode {
    guard(|| {
        if out.is_null() {
            return SlbfgsNullPointer;
        }
        let (Some(eval), Some(grad)) = (eval, grad) else {
            return SlbfgsNullPointer;
        };
        if dimension == 0 {
            return SlbfgsInvalidArgument;
        }
        let cb = std::sync::Arc::new(Callbacks {
            eval,
            grad,
            user_data,
        });
        let cb_eval = std::sync::Arc::clone(&cb);
        let problem = Problem::new(
            dimension,
            move |x: &Vector| unsafe {
                (cb_eval.eval)(x.as_ptr(), x.len(), cb_eval.user_data)
            },
            move |x: &Vector| {
                let mut out = Vector::zeros(x.len());
                unsafe { (cb.grad)(x.as_ptr(), x.len(), out.as_mut_ptr(), cb.user_data) };
                out
            },
        );
        let handle = Box::new(SlbfgsProblem {
            inner: problem,
            x0: Vector::zeros(dimension),
        });
        unsafe { *out = Box::into_raw(handle) };
        SlbfgsOk
    })
}

/// Problem dimension.
#[no_mangle]
pub extern "C" fn slbfgs_problem_dimension(
    problem: *const SlbfgsProblem,
    out: *mut usize,
) -> SlbfgsStatusCode {
    guard(|| {
        if problem.is_null() || out.is_null() {
            return SlbfgsNullPointer;
        }
        unsafe { *out = (*problem).inner.dimension() };
        SlbfgsOk
    })
}

#[no_mangle]
pub extern "C" fn slbfgs_problem_free(problem: *mut SlbfgsProblem) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// New configuration with library defaults (Bs strategy, memory 5,
/// Armijo line search, gradient tolerance 1e-8).
#[no_mangle]
pub extern "C" fn slbfgs_config_new(out: *mut *mut SlbfgsConfig) -> SlbfgsStatusCode {
    guard(|| {
        if out.is_null() {
            return SlbfgsNullPointer;
        }
        let handle = Box::new(SlbfgsConfig {
            inner: OptimizerConfig::default(),
        });
        unsafe { *out = Box::into_raw(handle) };
        SlbfgsOk
    })
}

/// Strategy by name: "hs", "hy", "bs", "bz", "bu", "bg" or "adap".
#[no_mangle]
pub extern "C" fn slbfgs_config_set_strategy(
    config: *mut SlbfgsConfig,
    name: *const c_char,
) -> SlbfgsStatusCode {
    guard(|| {
        if config.is_null() || name.is_null() {
            return SlbfgsNullPointer;
        }
        let Ok(s) = unsafe { CStr::from_ptr(name) }.to_str() else {
            return SlbfgsInvalidArgument;
        };
        match Strategy::parse(s) {
            Ok(strategy) => {
                unsafe { (*config).inner.strategy = strategy };
                SlbfgsOk
            }
            Err(_) => SlbfgsInvalidArgument,
        }
    })
}

/// Number of stored update pairs; negative keeps every pair.
#[no_mangle]
pub extern "C" fn slbfgs_config_set_memory(
    config: *mut SlbfgsConfig,
    memory: i64,
) -> SlbfgsStatusCode {
    guard(|| {
        if config.is_null() {
            return SlbfgsNullPointer;
        }
        unsafe {
            (*config).inner.memory = if memory < 0 {
                None
            } else {
                Some(memory as usize)
            };
        }
        SlbfgsOk
    })
}

#[no_mangle]
pub extern "C" fn slbfgs_config_set_gradient_tolerance(
    config: *mut SlbfgsConfig,
    grad_tol: f64,
) -> SlbfgsStatusCode {
    guard(|| {
        if config.is_null() {
            return SlbfgsNullPointer;
        }
        if grad_tol.is_nan() || grad_tol < 0.0 {
            return SlbfgsInvalidArgument;
        }
        unsafe {
            (*config).inner.stopping = StoppingRule {
                grad_tol,
                ..(*config).inner.stopping
            };
        }
        SlbfgsOk
    })
}

#[no_mangle]
pub extern "C" fn slbfgs_config_set_max_iterations(
    config: *mut SlbfgsConfig,
    max_iter: usize,
) -> SlbfgsStatusCode {
    guard(|| {
        if config.is_null() {
            return SlbfgsNullPointer;
        }
        unsafe { (*config).inner.max_iter = max_iter };
        SlbfgsOk
    })
}

/// Line search by name: "armijo", "wolfe" or "strong-wolfe".
#[no_mangle]
pub extern "C" fn slbfgs_config_set_line_search(
    config: *mut SlbfgsConfig,
    name: *const c_char,
) -> SlbfgsStatusCode {
    guard(|| {
        if config.is_null() || name.is_null() {
            return SlbfgsNullPointer;
        }
        let Ok(s) = unsafe { CStr::from_ptr(name) }.to_str() else {
            return SlbfgsInvalidArgument;
        };
        let kind = match s {
            "armijo" => LineSearchKind::Armijo,
            "wolfe" => LineSearchKind::Wolfe,
            "strong-wolfe" => LineSearchKind::StrongWolfe,
            _ => return SlbfgsInvalidArgument,
        };
        unsafe { (*config).inner.line_search.kind = kind };
        SlbfgsOk
    })
}

#[no_mangle]
pub extern "C" fn slbfgs_config_free(config: *mut SlbfgsConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Minimize `problem` from `x0` (length `n`; pass NULL to use the
/// problem's suggested start). The classical or structured driver is
/// picked from the configured strategy.
#[no_mangle]
pub extern "C" fn slbfgs_minimize(
    problem: *const SlbfgsProblem,
    x0: *const f64,
    n: usize,
    config: *const SlbfgsConfig,
    out: *mut *mut SlbfgsResult,
) -> SlbfgsStatusCode {
    guard(|| {
        if problem.is_null() || config.is_null() || out.is_null() {
            return SlbfgsNullPointer;
        }
        let problem = unsafe { &*problem };
        let config = unsafe { &*config };
        let start = if x0.is_null() {
            problem.x0.clone()
        } else {
            if n != problem.inner.dimension() {
                return SlbfgsDimensionMismatch;
            }
            Vector::from_column_slice(unsafe { std::slice::from_raw_parts(x0, n) })
        };
        match run_strategy(&problem.inner, &start, &config.inner) {
            Ok(result) => {
                let handle = Box::new(SlbfgsResult { inner: result });
                unsafe { *out = Box::into_raw(handle) };
                SlbfgsOk
            }
            Err(slbfgs::Error::InvalidConfig(_)) => SlbfgsInvalidArgument,
            Err(_) => SlbfgsRuntimeError,
        }
    })
}

#[no_mangle]
pub extern "C" fn slbfgs_result_status(
    result: *const SlbfgsResult,
    out: *mut SlbfgsRunStatus,
) -> SlbfgsStatusCode {
    guard(|| {
        if result.is_null() || out.is_null() {
            return SlbfgsNullPointer;
        }
        let status = match unsafe { &*result }.inner.status {
            Status::GradTol => SlbfgsRunStatus::SlbfgsConvergedGradTol,
            Status::FairTriple => SlbfgsRunStatus::SlbfgsConvergedFairTriple,
            Status::MaxIter => SlbfgsRunStatus::SlbfgsMaxIterations,
            Status::LineSearchFailed => SlbfgsRunStatus::SlbfgsLineSearchFailed,
            Status::NonFinite => SlbfgsRunStatus::SlbfgsNonFinite,
        };
        unsafe { *out = status };
        SlbfgsOk
    })
}

#[no_mangle]
pub extern "C" fn slbfgs_result_iterations(
    result: *const SlbfgsResult,
    out: *mut usize,
) -> SlbfgsStatusCode {
    guard(|| {
        if result.is_null() || out.is_null() {
            return SlbfgsNullPointer;
        }
        unsafe { *out = (*result).inner.iterations() };
        SlbfgsOk
    })
}

#[no_mangle]
pub extern "C" fn slbfgs_result_final_objective(
    result: *const SlbfgsResult,
    out: *mut f64,
) -> SlbfgsStatusCode {
    guard(|| {
        if result.is_null() || out.is_null() {
            return SlbfgsNullPointer;
        }
        unsafe { *out = (*result).inner.final_j };
        SlbfgsOk
    })
}

#[no_mangle]
pub extern "C" fn slbfgs_result_final_gradient_norm(
    result: *const SlbfgsResult,
    out: *mut f64,
) -> SlbfgsStatusCode {
    guard(|| {
        if result.is_null() || out.is_null() {
            return SlbfgsNullPointer;
        }
        unsafe { *out = (*result).inner.final_grad_norm };
        SlbfgsOk
    })
}

/// Copy the final iterate into `out` (length `n`, which must equal the
/// problem dimension).
#[no_mangle]
pub extern "C" fn slbfgs_result_solution(
    result: *const SlbfgsResult,
    out: *mut f64,
    n: usize,
) -> SlbfgsStatusCode {
    guard(|| {
        if result.is_null() || out.is_null() {
            return SlbfgsNullPointer;
        }
        let x = &unsafe { &*result }.inner.x_final;
        if n != x.len() {
            return SlbfgsDimensionMismatch;
        }
        unsafe { std::slice::from_raw_parts_mut(out, n) }.copy_from_slice(x.as_slice());
        SlbfgsOk
    })
}

#[no_mangle]
pub extern "C" fn slbfgs_result_free(result: *mut SlbfgsResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

/// Null-op used by binding smoke tests to confirm the library loads.
#[no_mangle]
pub extern "C" fn slbfgs_abi_version() -> u32 {
    1
}
