#ifndef NV_POLARIMETRY_H
#define NV_POLARIMETRY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum NvpStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  NVP_STATUS_OK = 0,
  NVP_STATUS_NULL_POINTER = 1,
  NVP_STATUS_DOMAIN = 2,
  NVP_STATUS_DEGENERATE_SAMPLING = 3,
  NVP_STATUS_INVALID_DATA = 4,
  NVP_STATUS_UNRESOLVABLE = 5,
  NVP_STATUS_PARSE = 6,
  NVP_STATUS_IO = 7,
  NVP_STATUS_INVALID_ARGUMENT = 8,
  NVP_STATUS_PANIC = 9,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum NvpStatus NvpStatus;
#else
typedef uint32_t NvpStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Values accepted for `averaging` in [`NvpEmissionModel`].
enum NvpAveraging
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  NVP_AVERAGING_AT_LIFETIME = 0,
  NVP_AVERAGING_EXPONENTIAL = 1,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum NvpAveraging NvpAveraging;
#else
typedef uint32_t NvpAveraging;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Values accepted for `weighting` in [`NvpEmissionModel`].
enum NvpWeighting
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  NVP_WEIGHTING_SQUARED = 0,
  NVP_WEIGHTING_LINEAR = 1,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum NvpWeighting NvpWeighting;
#else
typedef uint32_t NvpWeighting;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Values accepted wherever a branch is passed as `uint32_t`.
enum NvpBranch
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  NVP_BRANCH_X = 0,
  NVP_BRANCH_Y = 1,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum NvpBranch NvpBranch;
#else
typedef uint32_t NvpBranch;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Emitter parameters.
typedef struct NvpEmitter NvpEmitter;

// Monte Carlo trajectory samples.
typedef struct NvpSamples NvpSamples;

// Emission model; fields hold [`NvpAveraging`] and [`NvpWeighting`] values.
typedef struct NvpEmissionModel {
  uint32_t averaging;
  uint32_t weighting;
} NvpEmissionModel;

// `ci_low`/`ci_high` are NaN when no standard error was supplied.
typedef struct NvpGammaEstimate {
  double gamma_per_ns;
  double gamma_inv_ns;
  double alpha;
  double ci_low_ns;
  double ci_high_ns;
} NvpGammaEstimate;

typedef struct NvpFit {
  double a0;
  double a1;
  double a2;
  double contrast;
  double contrast_sigma;
  double phase_deg;
  double residual_rms;
} NvpFit;

typedef struct NvpSample {
  double emission_ns;
  // An [`NvpBranch`] value.
  uint32_t branch;
  uint32_t n_flips;
} NvpSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread; empty after a
// success. Valid until the next call into this library on the same thread.
const char *nvp_last_error(void);

// Emission model used when none is specified.
struct NvpEmissionModel nvp_default_model(void);

// Creates an emitter with default parameters.
//
// # Safety
// `out_emitter` must be a valid pointer.
NvpStatus nvp_emitter_new(struct NvpEmitter **out_emitter);

// Creates an emitter from `key = value` config text.
//
// # Safety
// `text` must be a NUL-terminated string; `out_emitter` a valid pointer.
NvpStatus nvp_emitter_from_config(const char *text, struct NvpEmitter **out_emitter);

// Sets one config key. The emitter is unchanged if the result is invalid.
//
// # Safety
// `emitter` must come from this library; `key` and `value` must be
// NUL-terminated strings.
NvpStatus nvp_emitter_set(struct NvpEmitter *emitter, const char *key, const char *value);

// # Safety
// `emitter` must come from this library or be null.
void nvp_emitter_free(struct NvpEmitter *emitter);

// Polarization contrast for rate `gamma_per_ns` and lifetime `tau_ns`.
//
// # Safety
// `out_contrast` must be a valid pointer.
NvpStatus nvp_contrast(double gamma_per_ns,
                       double tau_ns,
                       struct NvpEmissionModel model,
                       double *out_contrast);

// Inverts a contrast to a rate. A negative `sigma` skips the interval;
// otherwise the interval spans `z` standard errors.
//
// # Safety
// `out_estimate` must be a valid pointer.
NvpStatus nvp_invert_contrast(double contrast,
                              double sigma,
                              double z,
                              double tau_ns,
                              struct NvpEmissionModel model,
                              struct NvpGammaEstimate *out_estimate);

// Least-squares fit of `a0 + a1 cos 2θ + a2 sin 2θ`.
//
// # Safety
// `angles_deg` and `intensities` must each point to `n` doubles.
NvpStatus nvp_fit_cosine(const double *angles_deg,
                         const double *intensities,
                         size_t n,
                         struct NvpFit *out_fit);

// Contrast and alpha at each `1/gamma` in `gamma_inv_ns`.
//
// # Safety
// All arrays must hold `n` doubles.
NvpStatus nvp_figure4(double tau_ns,
                      struct NvpEmissionModel model,
                      const double *gamma_inv_ns,
                      size_t n,
                      double *out_contrast,
                      double *out_alpha);

// Analytic polarizer sweep of the emitter's emission after pumping `branch`.
// Pass NaN for `qwp_deg` to omit the quarter-wave plate.
//
// # Safety
// `emitter` must come from this library; `angles_deg` and
// `out_intensity` must each hold `n` doubles.
NvpStatus nvp_emitter_polarizer_sweep(const struct NvpEmitter *emitter,
                                      uint32_t branch,
                                      struct NvpEmissionModel model,
                                      double qwp_deg,
                                      const double *angles_deg,
                                      size_t n,
                                      double *out_intensity);

// Simulates `n` emitted photons with the emitter's symmetric rate.
//
// # Safety
// `emitter` must come from this library; `out_samples` a valid pointer.
NvpStatus nvp_mc_simulate(const struct NvpEmitter *emitter,
                          uint32_t branch,
                          size_t n,
                          uint64_t seed,
                          struct NvpSamples **out_samples);

// Number of samples; 0 for a null handle.
//
// # Safety
// `samples` must come from this library or be null.
size_t nvp_samples_len(const struct NvpSamples *samples);

// # Safety
// `samples` must come from this library; `out_sample` a valid pointer.
NvpStatus nvp_samples_get(const struct NvpSamples *samples,
                          size_t index,
                          struct NvpSample *out_sample);

// Fraction of samples emitted from `branch`.
//
// # Safety
// `samples` must come from this library; `out_fraction` a valid pointer.
NvpStatus nvp_samples_branch_fraction(const struct NvpSamples *samples,
                                      uint32_t branch,
                                      double *out_fraction);

// # Safety
// `samples` must come from this library or be null.
void nvp_samples_free(struct NvpSamples *samples);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NV_POLARIMETRY_H */
