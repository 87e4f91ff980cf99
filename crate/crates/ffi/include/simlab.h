#ifndef SIMLAB_H
#define SIMLAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes.
 */
typedef enum SimlabStatus {
  SIMLAB_STATUS_OK = 0,
  SIMLAB_STATUS_DOMAIN = 1,
  SIMLAB_STATUS_VALIDATION = 2,
  SIMLAB_STATUS_CONSISTENCY = 3,
  SIMLAB_STATUS_NUMERIC = 4,
  SIMLAB_STATUS_RESOURCE = 5,
  SIMLAB_STATUS_UNSUPPORTED = 6,
  SIMLAB_STATUS_INSUFFICIENT_SAMPLES = 7,
  SIMLAB_STATUS_CONFIG = 8,
  SIMLAB_STATUS_IO = 9,
  SIMLAB_STATUS_NULL_POINTER = 10,
  SIMLAB_STATUS_PANIC = 11,
} SimlabStatus;

/**
 * Fluid-limit solution.
 */
typedef struct SimlabFluid SimlabFluid;

/**
 * Model parameters.
 */
typedef struct SimlabParams SimlabParams;

/**
 * One simulated path.
 */
typedef struct SimlabPath SimlabPath;

/**
 * Admission-control policy.
 */
typedef struct SimlabPolicy SimlabPolicy;

/**
 * Constants of the fractional Ornstein-Uhlenbeck limit.
 */
typedef struct SimlabFouConstants {
  double kappa;
  double hurst;
  double sigma;
  double sigma0sq;
  double sigma0sq_closed;
} SimlabFouConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *simlab_last_error(void);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum SimlabStatus simlab_params_new(double beta,
                                    double theta,
                                    double alpha,
                                    double b,
                                    size_t d,
                                    uint64_t n,
                                    struct SimlabParams **out);

/**
 * Parameters with the drain rate `b` set to `a = 1/(theta (beta-2))`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SimlabStatus simlab_params_new_b_equal_a(double beta,
                                              double theta,
                                              double alpha,
                                              size_t d,
                                              uint64_t n,
                                              struct SimlabParams **out);

/**
 * # Safety
 * `p` must come from `simlab_params_new*` or be null.
 */
void simlab_params_free(struct SimlabParams *p);

/**
 * `a = 1/(theta (beta-2))`; NaN for a null handle.
 *
 * # Safety
 * `p` must be a valid handle or null.
 */
double simlab_params_a(const struct SimlabParams *p);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum SimlabStatus simlab_policy_linear(double c, struct SimlabPolicy **out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum SimlabStatus simlab_policy_linear_plus_tanh(double c1, double c2, struct SimlabPolicy **out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum SimlabStatus simlab_policy_no_control(struct SimlabPolicy **out);

/**
 * # Safety
 * `g` must come from a `simlab_policy_*` constructor or be null.
 */
void simlab_policy_free(struct SimlabPolicy *g);

/**
 * Solve the fluid system on `[0, horizon]` with step `h`.
 *
 * # Safety
 * Handles must be valid; `out` must be a valid pointer.
 */
enum SimlabStatus simlab_fluid_solve(const struct SimlabParams *p,
                                     const struct SimlabPolicy *g,
                                     double horizon,
                                     double h,
                                     struct SimlabFluid **out);

/**
 * # Safety
 * `f` must come from `simlab_fluid_solve` or be null.
 */
void simlab_fluid_free(struct SimlabFluid *f);

/**
 * `U(t)`, the offset `U(t) - b t` and `V(t)` at `t` inside the solved horizon.
 *
 * # Safety
 * `f` must be valid; output pointers must be valid.
 */
enum SimlabStatus simlab_fluid_eval(const struct SimlabFluid *f,
                                    double t,
                                    double *big_u,
                                    double *u,
                                    double *v);

/**
 * Station-level driver covariance `cov_R(s, t)`.
 *
 * # Safety
 * `f` must be valid; `out` must be a valid pointer.
 */
enum SimlabStatus simlab_cov_r(const struct SimlabFluid *f, double s, double t, double *out);

/**
 * Uniform bound on the second moment of the limit average fluctuation.
 *
 * # Safety
 * `f` must be valid; `out` must be a valid pointer.
 */
enum SimlabStatus simlab_moment_bound(const struct SimlabFluid *f, double *out);

/**
 * # Safety
 * Handles must be valid; `out` must be a valid pointer.
 */
enum SimlabStatus simlab_fou_constants(const struct SimlabParams *p,
                                       const struct SimlabPolicy *g,
                                       struct SimlabFouConstants *out);

/**
 * Simulate one path on `[0, horizon]`; `inversion` selects the
 * time-change algorithm instead of thinning.
 *
 * # Safety
 * Handles must be valid; `out` must be a valid pointer.
 */
enum SimlabStatus simlab_simulate(const struct SimlabParams *p,
                                  const struct SimlabPolicy *g,
                                  double horizon,
                                  uint64_t seed,
                                  bool inversion,
                                  struct SimlabPath **out);

/**
 * # Safety
 * `path` must come from `simlab_simulate` or be null.
 */
void simlab_path_free(struct SimlabPath *path);

/**
 * Average scaled workload at `t`.
 *
 * # Safety
 * `path` must be valid; `out` must be a valid pointer.
 */
enum SimlabStatus simlab_path_ybar(const struct SimlabPath *path, double t, double *out);

/**
 * Number of sessions started on `[0, horizon]`; 0 for a null handle.
 *
 * # Safety
 * `path` must be valid or null.
 */
size_t simlab_path_session_count(const struct SimlabPath *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIMLAB_H */
