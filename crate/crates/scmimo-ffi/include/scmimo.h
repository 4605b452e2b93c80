/* C interface to the scmimo closed-form engine. Generated by cbindgen; do not edit. */

#ifndef SCMIMO_H
#define SCMIMO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// CFO handling assumed by the evaluators.
typedef enum ScmimoCfoMode {
  // Residual CFO with the closed-form post-estimation variance.
  ScmimoCfoMode_Residual = 0,
  // Ideal synchronization (no CFO).
  ScmimoCfoMode_ZeroCfo = 1,
} ScmimoCfoMode;

// Result of every fallible call in this interface.
typedef enum ScmimoStatus {
  // Success; `out` parameters hold the results.
  ScmimoStatus_Ok = 0,
  // A required pointer argument was null.
  ScmimoStatus_NullArgument = 1,
  // A string argument was not valid UTF-8.
  ScmimoStatus_InvalidUtf8 = 2,
  // The configuration is invalid: unknown key, unparseable value, or a
  // system that fails structural validation.
  ScmimoStatus_InvalidConfig = 3,
  // An argument is outside the model's domain (user index, symbol time,
  // degenerate expression input).
  ScmimoStatus_Domain = 4,
  // The requested target cannot be reached at any admissible SNR.
  ScmimoStatus_Unachievable = 5,
  // Internal failure; the error message has details.
  ScmimoStatus_Internal = 6,
} ScmimoStatus;

// Opaque system description; create with [`scmimo_config_new`].
typedef struct ScmimoConfig ScmimoConfig;

// Solved SNR requirements for a rate target.
typedef struct ScmimoGapReport {
  // Required receive SNR (dB) under residual CFO.
  double gamma_required_db;
  // Required receive SNR (dB) with perfect synchronization.
  double gamma0_required_db;
  // `gamma_required_db - gamma0_required_db`.
  double gap_db;
  // Phase-error coefficient at the user's final data symbol.
  double alpha_kt;
  // Denominator floor `1/(m k gamma^2)` at the residual-CFO requirement.
  double theta_limit;
} ScmimoGapReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *scmimo_version(void);

// Message for the most recent failure on this thread (empty if none).
// Valid until the next failing call on the same thread.
const char *scmimo_last_error_message(void);

// Create a configuration handle holding the default system (160 antennas,
// 10 users, 10 taps, 2000-sample slots, uniform power-delay profile).
// Release it with [`scmimo_config_free`]. Never returns null.
struct ScmimoConfig *scmimo_config_new(void);

// Set one configuration key using the config-file vocabulary: `m`, `k`,
// `l`, `n`, `n_u`, `p_u`, `sigma2`, `kappa_ppm`, `f_c_hz`, `bw_hz`, `pdp`,
// `pdp.<user>`, `allow_wide_cfo`. Power values accept `dB`/`linear`
// suffixes. On error the handle keeps its previous state.
//
// # Safety
// `cfg` must be a live handle from [`scmimo_config_new`]; `key` and `value`
// must be NUL-terminated strings. No other thread may use `cfg`
// concurrently.
enum ScmimoStatus scmimo_config_set(struct ScmimoConfig *cfg, const char *key, const char *value);

// Check the handle's system as a whole: positive dimensions, profile shape,
// slot lengths, and the small-angle CFO bound.
//
// # Safety
// `cfg` must be a live handle from [`scmimo_config_new`].
enum ScmimoStatus scmimo_config_validate(const struct ScmimoConfig *cfg);

// Release a configuration handle. Passing null is a no-op.
//
// # Safety
// `cfg` must be null or a handle from [`scmimo_config_new`] that has not
// been freed already.
void scmimo_config_free(struct ScmimoConfig *cfg);

// Whole-frame achievable rate (bits per channel use) for `user` at the
// configured transmit power.
//
// # Safety
// `cfg` must be a live handle; `out_bpcu` must point to a writable double.
enum ScmimoStatus scmimo_rate(const struct ScmimoConfig *cfg,
                              uint32_t user,
                              enum ScmimoCfoMode mode,
                              double *out_bpcu);

// Smallest receive SNR (dB) at which `user` achieves `target_bpcu`.
//
// # Safety
// `cfg` must be a live handle; `out_db` must point to a writable double.
enum ScmimoStatus scmimo_min_snr_db(const struct ScmimoConfig *cfg,
                                    uint32_t user,
                                    double target_bpcu,
                                    enum ScmimoCfoMode mode,
                                    double *out_db);

// Required SNRs with and without residual CFO at `target_bpcu`, and their
// gap.
//
// # Safety
// `cfg` must be a live handle; `out` must point to a writable
// [`ScmimoGapReport`].
enum ScmimoStatus scmimo_snr_gap_db(const struct ScmimoConfig *cfg,
                                    uint32_t user,
                                    double target_bpcu,
                                    struct ScmimoGapReport *out);

// Closed-form residual-CFO variance (rad²/sample²) for `user` after
// estimation at the configured power.
//
// # Safety
// `cfg` must be a live handle; `out_var` must point to a writable double.
enum ScmimoStatus scmimo_cfo_residual_variance(const struct ScmimoConfig *cfg,
                                               uint32_t user,
                                               double *out_var);

// Phase-error coefficient α for `user` at symbol time `t` (the quantity in
// the asymptotic gap `5·log10(1+α)`).
//
// # Safety
// `cfg` must be a live handle; `out_alpha` must point to a writable double.
enum ScmimoStatus scmimo_alpha(const struct ScmimoConfig *cfg,
                               uint32_t user,
                               uint64_t t,
                               double *out_alpha);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCMIMO_H */
