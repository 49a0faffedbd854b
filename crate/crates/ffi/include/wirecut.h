#ifndef WIRECUT_H
#define WIRECUT_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define WIRECUT_MODE_STRATIFIED 0

#define WIRECUT_MODE_MULTINOMIAL 1

/**
 * Result code of every exported function.
 */
typedef enum WirecutStatus {
  WIRECUT_STATUS_OK = 0,
  WIRECUT_STATUS_NULL_POINTER = 1,
  WIRECUT_STATUS_INVALID_ARGUMENT = 2,
  WIRECUT_STATUS_OUT_OF_RANGE = 3,
  WIRECUT_STATUS_IO_ERROR = 4,
  WIRECUT_STATUS_PANIC = 5,
} WirecutStatus;

/**
 * Opaque quasiprobability decomposition.
 */
typedef struct WirecutQpd WirecutQpd;

/**
 * Opaque list of sweep records.
 */
typedef struct WirecutSweep WirecutSweep;

/**
 * One `(f, shots)` cell of a sweep.
 */
typedef struct WirecutRecord {
  double f;
  double k;
  uint64_t shots;
  double avg_error;
  double std_error;
  uint64_t n_states;
} WirecutRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next call into this library from the same thread.
 */
const char *wirecut_last_error(void);

/**
 * Optimal overhead `4(k^2+1)/(k+1)^2 - 1` for the resource parameter `k`.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum WirecutStatus wirecut_overhead_from_k(double k, double *out);

/**
 * Optimal overhead `2/f - 1` for a resource with Bell overlap `f`.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum WirecutStatus wirecut_overhead_from_f(double f, double *out);

/**
 * The `k` in `[0, 1]` whose resource state has Bell overlap `f`.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum WirecutStatus wirecut_k_from_f(double f, double *out);

/**
 * Creates the teleportation-based wire cut for resource parameter `k`.
 *
 * # Safety
 * `out` must be NULL or valid for writes. The handle must be released with
 * `wirecut_qpd_free`.
 */
enum WirecutStatus wirecut_qpd_new_nme(double k, struct WirecutQpd **out);

/**
 * Creates the entanglement-free measure-and-prepare wire cut.
 *
 * # Safety
 * Same contract as `wirecut_qpd_new_nme`.
 */
enum WirecutStatus wirecut_qpd_new_measure_prepare(struct WirecutQpd **out);

/**
 * Releases a decomposition. NULL is ignored.
 *
 * # Safety
 * `qpd` must be NULL or a handle from this library not yet freed.
 */
void wirecut_qpd_free(struct WirecutQpd *qpd);

/**
 * Number of terms.
 *
 * # Safety
 * `qpd` must be a live handle; `out` valid for writes.
 */
enum WirecutStatus wirecut_qpd_len(const struct WirecutQpd *qpd, size_t *out);

/**
 * Sum of absolute coefficients.
 *
 * # Safety
 * `qpd` must be a live handle; `out` valid for writes.
 */
enum WirecutStatus wirecut_qpd_kappa(const struct WirecutQpd *qpd, double *out);

/**
 * Coefficient of term `index` and whether it consumes a resource pair.
 * Either out-pointer may be NULL.
 *
 * # Safety
 * `qpd` must be a live handle; non-NULL out-pointers valid for writes.
 */
enum WirecutStatus wirecut_qpd_term(const struct WirecutQpd *qpd,
                                    size_t index,
                                    double *coefficient,
                                    bool *consumes_resource);

/**
 * Max-norm distance between the reconstructed and identity Choi matrices.
 *
 * # Safety
 * `qpd` must be a live handle; `out` valid for writes.
 */
enum WirecutStatus wirecut_qpd_identity_deviation(const struct WirecutQpd *qpd, double *out);

/**
 * Estimates `<0|W^dagger Z W|0>` through the cut with `shots` total shots.
 * `prep` holds the 2x2 unitary `W` row-major as interleaved real and
 * imaginary parts (8 doubles).
 *
 * # Safety
 * `qpd` must be a live handle, `prep` must point to 8 readable doubles and
 * `out` must be valid for writes.
 */
enum WirecutStatus wirecut_estimate_z(const struct WirecutQpd *qpd,
                                      const double *prep,
                                      uint64_t shots,
                                      uint64_t seed,
                                      uint64_t stream,
                                      uint32_t estimation_mode,
                                      double *out);

/**
 * Runs a paired sweep over `f_values` x `shot_grid` with `n_states` random
 * inputs.
 *
 * # Safety
 * The arrays must hold the stated number of elements; `out` must be valid
 * for writes. The handle must be released with `wirecut_sweep_free`.
 */
enum WirecutStatus wirecut_sweep_run(const double *f_values,
                                     size_t f_len,
                                     const uint64_t *shot_grid,
                                     size_t shots_len,
                                     size_t n_states,
                                     uint64_t seed,
                                     uint32_t estimation_mode,
                                     struct WirecutSweep **out);

/**
 * Number of records, ordered by f then shots.
 *
 * # Safety
 * `sweep` must be a live handle; `out` valid for writes.
 */
enum WirecutStatus wirecut_sweep_len(const struct WirecutSweep *sweep, size_t *out);

/**
 * Copies record `index` into `out`.
 *
 * # Safety
 * `sweep` must be a live handle; `out` valid for writes.
 */
enum WirecutStatus wirecut_sweep_record(const struct WirecutSweep *sweep,
                                        size_t index,
                                        struct WirecutRecord *out);

/**
 * Writes the sweep as CSV to the UTF-8 path `path`.
 *
 * # Safety
 * `sweep` must be a live handle and `path` a NUL-terminated string.
 */
enum WirecutStatus wirecut_sweep_write_csv(const struct WirecutSweep *sweep, const char *path);

/**
 * Releases a sweep. NULL is ignored.
 *
 * # Safety
 * `sweep` must be NULL or a handle from this library not yet freed.
 */
void wirecut_sweep_free(struct WirecutSweep *sweep);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WIRECUT_H */
