#ifndef CASCADE_GP_H
#define CASCADE_GP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum CgpStatus {
  CGP_STATUS_OK = 0,
  CGP_STATUS_NULL_POINTER = 1,
  CGP_STATUS_INVALID_ARGUMENT = 2,
  CGP_STATUS_DIMENSION_MISMATCH = 3,
  CGP_STATUS_NON_FINITE = 4,
  CGP_STATUS_NOT_POSITIVE_DEFINITE = 5,
  CGP_STATUS_IO = 6,
  CGP_STATUS_PARSE = 7,
  CGP_STATUS_MISSING_INPUT = 8,
  CGP_STATUS_NUMERICAL = 9,
  CGP_STATUS_PANIC = 10,
} CgpStatus;

/**
 * Opaque kinematic chain.
 */
typedef struct CgpChain CgpChain;

/**
 * Opaque trained inverse dynamics model.
 */
typedef struct CgpModel CgpModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cgp_version(void);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on this thread.
 */
const char *cgp_last_error(void);

/**
 * Built-in chain by name: `planar2r`, `pendulum`, `arm6`, `arm7`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CgpStatus cgp_chain_builtin(const char *name, struct CgpChain **out);

/**
 * Loads a chain description file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CgpStatus cgp_chain_load(const char *path, struct CgpChain **out);

/**
 * # Safety
 * `chain` must come from a `cgp_chain_*` constructor or be null.
 */
void cgp_chain_free(struct CgpChain *chain);

/**
 * Joint count, or 0 for a null handle.
 *
 * # Safety
 * `chain` must be a live handle or null.
 */
size_t cgp_chain_dof(const struct CgpChain *chain);

/**
 * Inverse dynamics `tau = H(q) qdd + C(q, qd) qd + g(q)`.
 *
 * # Safety
 * All arrays must hold `n` values.
 */
enum CgpStatus cgp_chain_rnea(const struct CgpChain *chain,
                              const double *q,
                              const double *qd,
                              const double *qdd,
                              size_t n,
                              double *tau_out);

/**
 * Joint-space inertia matrix, `n x n` row-major.
 *
 * # Safety
 * `q` holds `n` values and `h_out` room for `n * n`.
 */
enum CgpStatus cgp_chain_mass_matrix(const struct CgpChain *chain,
                                     const double *q,
                                     size_t n,
                                     double *h_out);

/**
 * Gravity torques `g(q)`.
 *
 * # Safety
 * `q` and `g_out` hold `n` values.
 */
enum CgpStatus cgp_chain_gravity_torques(const struct CgpChain *chain,
                                         const double *q,
                                         size_t n,
                                         double *g_out);

/**
 * Forward dynamics `qdd = H^-1 (tau - C qd - g)`.
 *
 * # Safety
 * All arrays hold `n` values.
 */
enum CgpStatus cgp_chain_forward_dynamics(const struct CgpChain *chain,
                                          const double *q,
                                          const double *qd,
                                          const double *tau,
                                          size_t n,
                                          double *qdd_out);

/**
 * Loads a model bundle directory written by the library or CLI.
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CgpStatus cgp_model_load(const char *dir, struct CgpModel **out);

/**
 * # Safety
 * `model` must come from `cgp_model_load` or be null.
 */
void cgp_model_free(struct CgpModel *model);

/**
 * Joint count, or 0 for a null handle.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
size_t cgp_model_dof(const struct CgpModel *model);

/**
 * Position samples per joint that derivative-free models need, current
 * one included; 0 when none are needed.
 *
 * # Safety
 * `model` must be a live handle or null.
 */
size_t cgp_model_history_len(const struct CgpModel *model);

/**
 * Predicts joint torques. `q_history` is `n x history_len` row-major,
 * newest sample first per joint, and may be null when `history_len` is 0.
 *
 * # Safety
 * `q`, `qd`, `qdd`, `tau_out` hold `n` values; `q_history`, when not null,
 * holds `n * history_len`.
 */
enum CgpStatus cgp_model_predict(const struct CgpModel *model,
                                 const double *q,
                                 const double *qd,
                                 const double *qdd,
                                 size_t n,
                                 const double *q_history,
                                 size_t history_len,
                                 double *tau_out);

/**
 * Root-mean-square error over the range of `truth`.
 *
 * # Safety
 * `predictions` and `truth` hold `len` values; `out` is valid.
 */
enum CgpStatus cgp_nrmse(const double *predictions, const double *truth, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CASCADE_GP_H */
