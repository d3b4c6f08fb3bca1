#ifndef DOPPLER_TRACK_H
#define DOPPLER_TRACK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DtStatus {
  DT_STATUS_OK = 0,
  DT_STATUS_NULL_POINTER = 1,
  DT_STATUS_INVALID_CONFIG = 2,
  DT_STATUS_OUT_OF_BRANCH = 3,
  DT_STATUS_INSUFFICIENT_DATA = 4,
  DT_STATUS_DEGENERATE = 5,
  DT_STATUS_RANK_TOO_LARGE = 6,
  DT_STATUS_DIMENSION_MISMATCH = 7,
  DT_STATUS_PARSE = 8,
  DT_STATUS_IO = 9,
  DT_STATUS_BUFFER_TOO_SMALL = 10,
  DT_STATUS_PANIC = 11,
} DtStatus;

typedef enum DtMethod {
  DT_METHOD_FROBENIUS = 0,
  DT_METHOD_SUBSPACE_EVD = 1,
} DtMethod;

/**
 * Opaque streaming tracker.
 */
typedef struct DtTracker DtTracker;

typedef struct DtTiming {
  uint32_t n_fft;
  uint32_t cp_len;
  /**
   * Seconds.
   */
  double sample_period;
} DtTiming;

typedef struct DtEstimate {
  double eta;
  /**
   * NaN when the ratio could not be formed.
   */
  double fd_hz;
  uint32_t rank;
  bool valid;
} DtEstimate;

/**
 * Tap-delay-line profile: delays in samples, linear powers (normalized
 * internally), `taps` entries each.
 */
typedef struct DtProfile {
  const double *delays;
  const double *powers;
  size_t taps;
} DtProfile;

typedef struct DtBias {
  double rho;
  double rho_r;
  double rho_lower_bound;
} DtBias;

typedef struct DtTrackerConfig {
  uint32_t pilots;
  uint32_t max_rank;
  uint32_t beta;
  double alpha;
  uint32_t hold_off;
  struct DtTiming timing;
} DtTrackerConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *dt_status_message(enum DtStatus status);

/**
 * Message of the last failure on this thread. Valid until the next call
 * that fails on the same thread.
 */
const char *dt_last_error(void);

/**
 * N = 512, Lcp = 64, T = 200 ns.
 */
struct DtTiming dt_timing_lte_5mhz(void);

double dt_bessel_j0(double x);

/**
 * Inverse of J0 on `[0, 2.404826)`; `y` must lie in `(0, 1]`.
 *
 * # Safety
 * `out` must be null or valid for a write.
 */
enum DtStatus dt_bessel_j0_inv(double y, double *out);

/**
 * Symbol-averaged correlation factor at lag `beta` for Doppler `fd` (Hz).
 *
 * # Safety
 * `timing` and `out` must be null or valid.
 */
enum DtStatus dt_xi(uint32_t beta, const struct DtTiming *timing, double fd, double *out);

/**
 * Maps a correlation ratio to a Doppler estimate.
 *
 * # Safety
 * `timing` and `out` must be null or valid.
 */
enum DtStatus dt_estimate_fd(double eta,
                             uint32_t beta,
                             const struct DtTiming *timing,
                             struct DtEstimate *out);

/**
 * Batch estimate over `symbols` consecutive observations of `pilots`
 * complex values each (`2 * symbols * pilots` doubles, symbol-major).
 * `rank = 0` selects the subspace rank by MDL; it is ignored for the
 * Frobenius method.
 *
 * # Safety
 * `observations` must hold `2 * symbols * pilots` doubles; `timing` and
 * `out` must be null or valid.
 */
enum DtStatus dt_estimate_batch(const double *observations,
                                size_t symbols,
                                size_t pilots,
                                uint32_t beta,
                                const struct DtTiming *timing,
                                enum DtMethod method,
                                uint32_t rank,
                                struct DtEstimate *out);

/**
 * Closed-form noise-bias terms for a comb with `pilots` pilots.
 *
 * # Safety
 * `timing`, `profile` and `out` must be null or valid; `profile` arrays
 * must hold `taps` entries.
 */
enum DtStatus dt_bias(const struct DtTiming *timing,
                      uint32_t pilots,
                      const struct DtProfile *profile,
                      double snr_db,
                      struct DtBias *out);

/**
 * Simulates `symbols` LS pilot observations of a fading channel into
 * `out` (`2 * symbols * pilots` doubles). `snr_db = INFINITY` is noiseless.
 *
 * # Safety
 * `timing` and `profile` must be null or valid; `out` must hold `out_len`
 * doubles.
 */
enum DtStatus dt_simulate(const struct DtTiming *timing,
                          uint32_t pilots,
                          const struct DtProfile *profile,
                          double fd,
                          double snr_db,
                          uint64_t seed,
                          size_t symbols,
                          double *out,
                          size_t out_len);

/**
 * Default tracker settings: `alpha = 0.995`, `max_rank = min(10, pilots)`,
 * `beta = 1`, 30-symbol hold-off.
 *
 * # Safety
 * `timing` must be null or valid; a null `timing` selects the 5 MHz preset.
 */
struct DtTrackerConfig dt_tracker_default_config(uint32_t pilots, const struct DtTiming *timing);

/**
 * Creates a tracker. Free it with [`dt_tracker_free`].
 *
 * # Safety
 * `config` and `out` must be null or valid.
 */
enum DtStatus dt_tracker_new(const struct DtTrackerConfig *config, struct DtTracker **out);

/**
 * # Safety
 * `tracker` must be null or come from [`dt_tracker_new`] and not be used
 * afterwards.
 */
void dt_tracker_free(struct DtTracker *tracker);

/**
 * Feeds one observation of `pilots` complex values. `*has_estimate` is
 * set when the tracker emitted an estimate this step.
 *
 * # Safety
 * `tracker` must be a live handle; `observation` must hold `2 * pilots`
 * doubles; `out` and `has_estimate` must be null or valid.
 */
enum DtStatus dt_tracker_step(struct DtTracker *tracker,
                              const double *observation,
                              size_t pilots,
                              struct DtEstimate *out,
                              bool *has_estimate);

/**
 * Latest estimate, including ones still inside the hold-off period.
 *
 * # Safety
 * `tracker` must be a live handle; `out` and `has_estimate` must be null or
 * valid.
 */
enum DtStatus dt_tracker_latest(const struct DtTracker *tracker,
                                struct DtEstimate *out,
                                bool *has_estimate);

/**
 * Symbols consumed; 0 for a null handle.
 *
 * # Safety
 * `tracker` must be null or a live handle.
 */
uint64_t dt_tracker_symbols(const struct DtTracker *tracker);

/**
 * Current MDL rank; 0 for a null handle.
 *
 * # Safety
 * `tracker` must be null or a live handle.
 */
uint32_t dt_tracker_rank(const struct DtTracker *tracker);

/**
 * Copies the tracked basis of the lag-0 (`lag = 0`) or lag-beta
 * (`lag != 0`) tracker, `pilots x max_rank` complex values in row-major
 * order, into `out`.
 *
 * # Safety
 * `tracker` must be a live handle; `out` must hold `out_len` doubles.
 */
enum DtStatus dt_tracker_basis(const struct DtTracker *tracker,
                               uint32_t lag,
                               double *out,
                               size_t out_len);

/**
 * Copies `|diag(R)|` (`max_rank` doubles) of the selected tracker.
 *
 * # Safety
 * `tracker` must be a live handle; `out` must hold `out_len` doubles.
 */
enum DtStatus dt_tracker_rdiag(const struct DtTracker *tracker,
                               uint32_t lag,
                               double *out,
                               size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DOPPLER_TRACK_H */
