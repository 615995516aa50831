#ifndef SPIRAL_KINEMATICS_H
#define SPIRAL_KINEMATICS_H

#include <stdint.h>
#include <stddef.h>

typedef enum SkStatus {
  SK_STATUS_OK = 0,
  SK_STATUS_NO_SOLUTION = 2,
  SK_STATUS_NUMERICAL = 3,
  SK_STATUS_INVALID_ARGUMENT = 4,
  SK_STATUS_NULL_POINTER = 5,
  SK_STATUS_PANIC = 6,
} SkStatus;

typedef enum SkCase {
  SK_CASE_ROTATING_GROWING = 0,
  SK_CASE_NONROTATING = 1,
  SK_CASE_ROTATING_CONTRACTING = 2,
  SK_CASE_NO_SOLUTION = 3,
} SkCase;

typedef enum SkOutcomeKind {
  SK_OUTCOME_KIND_RETURNS = 0,
  SK_OUTCOME_KIND_ESCAPES = 1,
  SK_OUTCOME_KIND_DECAYS = 2,
  SK_OUTCOME_KIND_BUDGET_EXCEEDED = 3,
} SkOutcomeKind;

/**
 * Solved rotating or nonrotating wave. Opaque to C.
 */
typedef struct SkSolution SkSolution;

/**
 * Plane-wave speed and curvature coefficient.
 */
typedef struct SkMedium {
  double v0;
  double d;
} SkMedium;

/**
 * Log tip curvature, tip tangential velocity and oscillation index.
 */
typedef struct SkTip {
  double l0;
  double g;
  uint32_t osc_index;
} SkTip;

typedef struct SkOutcome {
  enum SkOutcomeKind kind;
  double s_event;
  double l_event;
  double v_event;
} SkOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *sk_last_error_message(void);

/**
 * Solves for the rotation frequency. `tol_omega <= 0` selects the default.
 * On `SK_STATUS_NO_SOLUTION` no handle is written and the diagnostic is
 * available from `sk_last_error_message`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SkStatus sk_solve(struct SkMedium m,
                       struct SkTip tip,
                       double tol_omega,
                       struct SkSolution **out);

/**
 * # Safety
 * `sol` must come from `sk_solve` and not have been freed; null is ignored.
 */
void sk_solution_free(struct SkSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle and `out` writable.
 */
enum SkStatus sk_solution_omega(const struct SkSolution *sol, double *out);

/**
 * # Safety
 * `sol` must be a live handle and `out` writable.
 */
enum SkStatus sk_solution_case(const struct SkSolution *sol, enum SkCase *out);

/**
 * # Safety
 * `sol` must be a live handle and `out` writable.
 */
enum SkStatus sk_solution_crossing_count(const struct SkSolution *sol, uint32_t *out);

/**
 * Samples the front at time `t` at `n` arclengths uniform on `[0, s_max]`,
 * with the tip path centred on the origin at `t = 0`. `kappa` may be null.
 *
 * # Safety
 * `x` and `y` (and `kappa` when non-null) must point to `n` writable doubles.
 */
enum SkStatus sk_solution_sample_curve(const struct SkSolution *sol,
                                       double t,
                                       double theta00,
                                       double s_max,
                                       size_t n,
                                       double *x,
                                       double *y,
                                       double *kappa);

/**
 * Centre and radius of the circle traced by the tip, for tip origin `(0, 0)`
 * at `t = 0`. Fails with `SK_STATUS_INVALID_ARGUMENT` for a nonrotating wave.
 *
 * # Safety
 * `sol` must be a live handle and the out-pointers writable.
 */
enum SkStatus sk_solution_tip_circle(const struct SkSolution *sol,
                                     double theta00,
                                     double *xc,
                                     double *yc,
                                     double *radius);

/**
 * Intercept of the separatrix on the axis for `0 < omega < 2 v0²/d`.
 *
 * # Safety
 * `l_star` must be writable.
 */
enum SkStatus sk_find_separatrix(struct SkMedium m, double omega, double *l_star);

/**
 * Fate of the forward trajectory from `(l, v)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SkStatus sk_classify(struct SkMedium m,
                          double omega,
                          double l,
                          double v,
                          struct SkOutcome *out);

/**
 * Range of `l0` admitting a rotating solution for tip velocity `g`. The
 * lower end is `-INFINITY` when `g >= 0`; `SK_STATUS_NO_SOLUTION` when empty.
 *
 * # Safety
 * `lo` and `hi` must be writable.
 */
enum SkStatus sk_feasibility_window(struct SkMedium m, double g, double *lo, double *hi);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPIRAL_KINEMATICS_H */
