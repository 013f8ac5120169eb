/* C interface to the slbfgs optimization library. */

#ifndef SLBFGS_H
#define SLBFGS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Why a run ended, mirrored as stable integers.
 */
typedef enum SlbfgsRunStatus {
  SLBFGS_CONVERGED_GRAD_TOL = 0,
  SLBFGS_CONVERGED_FAIR_TRIPLE = 1,
  SLBFGS_MAX_ITERATIONS = 2,
  SLBFGS_LINE_SEARCH_FAILED = 3,
  SLBFGS_NON_FINITE = 4,
} SlbfgsRunStatus;

/**
 * Return codes of every FFI entry point.
 */
typedef enum SlbfgsStatusCode {
  SLBFGS_OK = 0,
  SLBFGS_NULL_POINTER = 1,
  SLBFGS_INVALID_ARGUMENT = 2,
  SLBFGS_DIMENSION_MISMATCH = 3,
  SLBFGS_RUNTIME_ERROR = 4,
  SLBFGS_INTERNAL_PANIC = 5,
} SlbfgsStatusCode;

/**
 * Opaque solver configuration handle.
 */
typedef struct SlbfgsConfig SlbfgsConfig;

/**
 * Opaque problem handle.
 */
typedef struct SlbfgsProblem SlbfgsProblem;

/**
 * Opaque result handle.
 */
typedef struct SlbfgsResult SlbfgsResult;

/**
 * Objective callback: `f(x, n, user_data) -> J(x)`. Nullable; a null
 * callback is rejected with `SLBFGS_NULL_POINTER`.
 */
typedef double (*SlbfgsObjectiveFn)(const double *x, uintptr_t n, void *user_data);

/**
 * Gradient callback: writes `grad J(x)` into `out` (length `n`).
 * Nullable; a null callback is rejected with `SLBFGS_NULL_POINTER`.
 */
typedef void (*SlbfgsGradientFn)(const double *x, uintptr_t n, double *out, void *user_data);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create the built-in structured quadratic benchmark problem on an
 * m-by-m grid. Writes the handle to `out`.
 */
enum SlbfgsStatusCode slbfgs_problem_quadratic(uintptr_t m,
                                               double alpha,
                                               struct SlbfgsProblem **out);

/**
 * Create the built-in smooth non-convex problem (deterministic in
 * `seed`).
 */
enum SlbfgsStatusCode slbfgs_problem_nonconvex(uintptr_t m,
                                               double alpha,
                                               uint64_t seed,
                                               struct SlbfgsProblem **out);

/**
 * Create a problem from user callbacks. `user_data` is passed through
 * unchanged; it must stay valid until the problem is freed.
 */
enum SlbfgsStatusCode slbfgs_problem_callbacks(uintptr_t dimension,
                                               SlbfgsObjectiveFn eval,
                                               SlbfgsGradientFn grad,
                                               void *user_data,
                                               struct SlbfgsProblem **out);

/**
 * Problem dimension.
 */
enum SlbfgsStatusCode slbfgs_problem_dimension(const struct SlbfgsProblem *problem, uintptr_t *out);

void slbfgs_problem_free(struct SlbfgsProblem *problem);

/**
 * New configuration with library defaults (Bs strategy, memory 5,
 * Armijo line search, gradient tolerance 1e-8).
 */
enum SlbfgsStatusCode slbfgs_config_new(struct SlbfgsConfig **out);

/**
 * Strategy by name: "hs", "hy", "bs", "bz", "bu", "bg" or "adap".
 */
enum SlbfgsStatusCode slbfgs_config_set_strategy(struct SlbfgsConfig *config, const char *name);

/**
 * Number of stored update pairs; negative keeps every pair.
 */
enum SlbfgsStatusCode slbfgs_config_set_memory(struct SlbfgsConfig *config, int64_t memory);

enum SlbfgsStatusCode slbfgs_config_set_gradient_tolerance(struct SlbfgsConfig *config,
                                                           double grad_tol);

enum SlbfgsStatusCode slbfgs_config_set_max_iterations(struct SlbfgsConfig *config,
                                                       uintptr_t max_iter);

/**
 * Line search by name: "armijo", "wolfe" or "strong-wolfe".
 */
enum SlbfgsStatusCode slbfgs_config_set_line_search(struct SlbfgsConfig *config, const char *name);

void slbfgs_config_free(struct SlbfgsConfig *config);

/**
 * Minimize `problem` from `x0` (length `n`; pass NULL to use the
 * problem's suggested start). The classical or structured driver is
 * picked from the configured strategy.
 */
enum SlbfgsStatusCode slbfgs_minimize(const struct SlbfgsProblem *problem,
                                      const double *x0,
                                      uintptr_t n,
                                      const struct SlbfgsConfig *config,
                                      struct SlbfgsResult **out);

enum SlbfgsStatusCode slbfgs_result_status(const struct SlbfgsResult *result,
                                           enum SlbfgsRunStatus *out);

enum SlbfgsStatusCode slbfgs_result_iterations(const struct SlbfgsResult *result, uintptr_t *out);

enum SlbfgsStatusCode slbfgs_result_final_objective(const struct SlbfgsResult *result, double *out);

enum SlbfgsStatusCode slbfgs_result_final_gradient_norm(const struct SlbfgsResult *result,
                                                        double *out);

/**
 * Copy the final iterate into `out` (length `n`, which must equal the
 * problem dimension).
 */
enum SlbfgsStatusCode slbfgs_result_solution(const struct SlbfgsResult *result,
                                             double *out,
                                             uintptr_t n);

void slbfgs_result_free(struct SlbfgsResult *result);

/**
 * Null-op used by binding smoke tests to confirm the library loads.
 */
uint32_t slbfgs_abi_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLBFGS_H */
