#ifndef HEISENBERG_LASER_H
#define HEISENBERG_LASER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HlFamily {
  // `param` is λ.
  HL_FAMILY_PLAMBDA = 0,
  // `param` is q.
  HL_FAMILY_PQ = 1,
  // `param` is ignored.
  HL_FAMILY_PFAMILY = 2,
} HlFamily;

typedef enum HlStatus {
  HL_STATUS_OK = 0,
  HL_STATUS_NULL_POINTER = 1,
  HL_STATUS_DOMAIN = 2,
  HL_STATUS_DEGENERATE = 3,
  HL_STATUS_NUMERIC = 4,
  HL_STATUS_INTEGRATION = 5,
  HL_STATUS_BREAKDOWN = 6,
  HL_STATUS_BUFFER_TOO_SMALL = 7,
  HL_STATUS_PANIC = 8,
} HlStatus;

// A realized generator together with its steady state.
typedef struct HlModel HlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a model of dimension `dim` (at least 3). `linearized` selects
// the linearized coefficients. On success `*out` owns a new handle.
//
// # Safety
// `out` must be null or valid for a pointer write.
enum HlStatus hl_model_new(enum HlFamily kind,
                           double param,
                           size_t dim,
                           double p,
                           double flux,
                           int linearized,
                           struct HlModel **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `model` must come from `hl_model_new` and not have been freed.
void hl_model_free(struct HlModel *model);

// # Safety
// `model` must be a live handle; `out` valid for a write.
enum HlStatus hl_model_dim(const struct HlModel *model, size_t *out);

// Flux normalization r of the realized generator.
//
// # Safety
// `model` must be a live handle; `out` valid for a write.
enum HlStatus hl_normalization_r(const struct HlModel *model, double *out);

// Copies the D stationary populations into `out`.
//
// # Safety
// `model` must be a live handle; `out` valid for `len` doubles.
enum HlStatus hl_steady_state(const struct HlModel *model, double *out, size_t len);

// |Σ negative populations| of the stationary state.
//
// # Safety
// `model` must be a live handle; `out` valid for a write.
enum HlStatus hl_negativity(const struct HlModel *model, double *out);

// G¹(t) on an increasing grid of `n` times.
//
// # Safety
// `model` must be a live handle; `grid` and `out` valid for `n` doubles.
enum HlStatus hl_g1(const struct HlModel *model, const double *grid, size_t n, double *out);

// g²(t) on an increasing grid of `n` times.
//
// # Safety
// `model` must be a live handle; `grid` and `out` valid for `n` doubles.
enum HlStatus hl_g2(const struct HlModel *model, const double *grid, size_t n, double *out);

// S_I(ω) on an increasing grid of `n` frequencies. Points whose solve
// failed are NaN.
//
// # Safety
// `model` must be a live handle; `omegas` and `out` valid for `n` doubles.
enum HlStatus hl_intensity_spectrum(const struct HlModel *model,
                                    const double *omegas,
                                    size_t n,
                                    double *out);

// Mandel-Q over a counting window `t`.
//
// # Safety
// `model` must be a live handle; `out` valid for a write.
enum HlStatus hl_mandel_q(const struct HlModel *model, double t, double *out);

// Beam coherence 𝔠.
//
// # Safety
// `model` must be a live handle; `out` valid for a write.
enum HlStatus hl_coherence(const struct HlModel *model, double *out);

// Linearized coherence of a family at (p, μ).
double hl_coherence_lin(enum HlFamily kind, double param, double p, double mu);

// Linearized phase diffusion rate ℓ.
double hl_diffusion_rate(enum HlFamily kind, double param, double p, double mu, double flux);

// Upper bound on the coherence at mean excitation μ.
double hl_heisenberg_bound(double mu);

// Seed-averaged filter MSE for a beam of coherence `coherence`, run for
// `tau_multiple` filter times per seed over seeds `seed..seed+seeds`.
// Writes the mean and its standard error.
//
// # Safety
// `mean` and `std_error` must be valid for writes.
enum HlStatus hl_filter_mse(double coherence,
                            double flux,
                            double tau_multiple,
                            uint64_t seed,
                            size_t seeds,
                            double *mean,
                            double *std_error);

// Copies the calling thread's last error message, NUL terminated and
// truncated to fit, into `buf`. Returns the full message length excluding
// the terminator, so a caller can size a second attempt. Empty after a
// successful call.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t hl_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *hl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEISENBERG_LASER_H */
