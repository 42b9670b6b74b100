/* C interface to the pulsemark heartbeat toolkit. Generated; do not edit. */

#ifndef PULSEMARK_H
#define PULSEMARK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Pointwise cost for the alignment functions.
typedef enum PmCost {
  // |a - b|
  PM_COST_ABS = 0,
  // (a - b)^2
  PM_COST_SQ = 1,
} PmCost;

// Result of every call in this interface.
typedef enum PmStatus {
  // The call succeeded and any out-pointer was written.
  PM_STATUS_OK = 0,
  // A required pointer argument was null.
  PM_STATUS_NULL_ARG = 1,
  // A string argument was not valid UTF-8.
  PM_STATUS_BAD_UTF8 = 2,
  // An argument was rejected by validation (empty input, infeasible band,
  // duplicate thread id, zero flush interval, and the like).
  PM_STATUS_INVALID_ARG = 3,
  // Two sequences that must have equal lengths did not.
  PM_STATUS_LENGTH_MISMATCH = 4,
  // The sink could not be opened or written.
  PM_STATUS_IO = 5,
} PmStatus;

// Heartbeat emitter session; create with [`pm_emitter_start`].
typedef struct PmEmitter PmEmitter;

// Per-thread beat counter; create with [`pm_emitter_register_thread`].
typedef struct PmThread PmThread;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version of the library as a static NUL-terminated string; never null,
// never freed by the caller.
const char *pm_version(void);

// Start a heartbeat emitter writing to the file at `path`, flushing every
// `flush_interval_ms` milliseconds, stamping records with `trace_id`. On
// success writes the new handle to `*out`.
//
// # Safety
// `trace_id` and `path` must point to NUL-terminated strings and `out` to a
// writable pointer slot.
enum PmStatus pm_emitter_start(const char *trace_id,
                               const char *path,
                               uint64_t flush_interval_ms,
                               struct PmEmitter **out);

// Register a beat counter for `thread_id` on a running emitter. Thread ids
// must be unique within the session. On success writes the new handle to
// `*out`.
//
// # Safety
// `emitter` must be a live handle from [`pm_emitter_start`] and `out` a
// writable pointer slot.
enum PmStatus pm_emitter_register_thread(struct PmEmitter *emitter,
                                         uint32_t thread_id,
                                         struct PmThread **out);

// Count one heartbeat. Safe to call concurrently from the thread that owns
// the handle while other threads beat their own handles; the counter is
// atomic and the call never blocks.
//
// # Safety
// `thread` must be a live handle from [`pm_emitter_register_thread`].
enum PmStatus pm_thread_beat(struct PmThread *thread);

// Release a thread handle. The emitter keeps flushing the thread's counter
// until the session stops.
//
// # Safety
// `thread` must be a handle from [`pm_emitter_register_thread`] not yet
// freed; null is a no-op.
void pm_thread_free(struct PmThread *thread);

// Flush the final partial interval, stop the background flusher, and
// release the emitter handle. The handle is invalid afterwards even though
// outstanding thread handles remain safe to beat and free.
//
// # Safety
// `emitter` must be a handle from [`pm_emitter_start`] not yet stopped.
enum PmStatus pm_emitter_stop(struct PmEmitter *emitter);

// Alignment distance between `q` (length `q_len`) and `c` (length `c_len`)
// under the chosen cost, written to `*out`. A negative `band` means
// unconstrained; a non-negative one restricts matching to |i - j| <= band
// and must be at least the length difference.
//
// # Safety
// `q` and `c` must point to readable arrays of the stated lengths and `out`
// to a writable double.
enum PmStatus pm_dtw(const double *q,
                     size_t q_len,
                     const double *c,
                     size_t c_len,
                     enum PmCost cost,
                     int64_t band,
                     double *out);

// Envelope-based lower bound on the banded alignment distance between two
// equal-length sequences, envelope half-width `w`, written to `*out`. The
// bound never exceeds `pm_dtw` of the same pair with `band = w`.
//
// # Safety
// `q` and `c` must point to readable arrays of the stated lengths and `out`
// to a writable double.
enum PmStatus pm_lb_keogh(const double *q,
                          size_t q_len,
                          const double *c,
                          size_t c_len,
                          size_t w,
                          enum PmCost cost,
                          double *out);

// Running upper and lower bounds of `q` over the window [i - w, i + w],
// written elementwise to `upper` and `lower`, each `q_len` long.
//
// # Safety
// `q` must point to a readable array and `upper` and `lower` to writable
// arrays, all of length `q_len`.
enum PmStatus pm_envelope(const double *q, size_t q_len, size_t w, double *upper, double *lower);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PULSEMARK_H */
