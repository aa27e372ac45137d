#ifndef SPECMODE_H
#define SPECMODE_H

/* Generated by cbindgen from the specmode-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  /**
   * Success; out-parameters are valid.
   */
  SPECMODE_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SPECMODE_STATUS_NULL_ARGUMENT = 1,
  /**
   * Invalid parameters or API misuse; see `specmode_last_error`.
   */
  SPECMODE_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A declared numerical budget (tensor size, photon count) was exceeded.
   */
  SPECMODE_STATUS_BUDGET_EXCEEDED = 3,
  /**
   * A numerical condition failed (unnormalizable state, zero-probability
   * condition, ...).
   */
  SPECMODE_STATUS_NUMERICAL_FAILURE = 4,
  /**
   * An internal panic was caught at the boundary.
   */
  SPECMODE_STATUS_PANIC = 5,
} SpecmodeStatus;

/**
 * Single-photon spectral function handle.
 */
typedef struct SpecmodeFunction SpecmodeFunction;

/**
 * Frequency grid handle.
 */
typedef struct SpecmodeGrid SpecmodeGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread; the string is empty
 * when nothing has failed yet.
 */
const char *specmode_last_error(void);

/**
 * Creates a uniform frequency grid over [omega_min, omega_max] with the
 * given number of nodes.
 *
 * # Safety
 *
 * `out` must be null or valid for writing one pointer.
 */
SpecmodeStatus specmode_grid_new(double omega_min,
                                 double omega_max,
                                 size_t points,
                                 SpecmodeGrid **out);

/**
 * Releases a grid handle; null is ignored.
 *
 * # Safety
 *
 * `grid` must be null or a pointer returned by `specmode_grid_new` that has
 * not been freed yet.
 */
void specmode_grid_free(SpecmodeGrid *grid);

/**
 * Normalized Gaussian pulse: amplitude exp(−((ω−center)/2·width)²) with a
 * delay phase exp(−iωτ).
 *
 * # Safety
 *
 * `grid` must be null or a live grid handle; `out` must be null or valid
 * for writing one pointer.
 */
SpecmodeStatus specmode_gaussian_pulse(const SpecmodeGrid *grid,
                                       double center,
                                       double width,
                                       double delay,
                                       SpecmodeFunction **out);

/**
 * Normalized flat window over [omega_lo, omega_hi].
 *
 * # Safety
 *
 * `grid` must be null or a live grid handle; `out` must be null or valid
 * for writing one pointer.
 */
SpecmodeStatus specmode_rect_window(const SpecmodeGrid *grid,
                                    double omega_lo,
                                    double omega_hi,
                                    SpecmodeFunction **out);

/**
 * Releases a spectral-function handle; null is ignored.
 *
 * # Safety
 *
 * `function` must be null or a pointer returned by a `specmode_*` function
 * constructor that has not been freed yet.
 */
void specmode_function_free(SpecmodeFunction *function);

/**
 * Quadrature inner product ⟨f, g⟩ (conjugation on `f`).
 *
 * # Safety
 *
 * `f` and `g` must be null or live function handles; `out_re` and `out_im`
 * must be null or valid for writing one double each.
 */
SpecmodeStatus specmode_inner_product(const SpecmodeFunction *f,
                                      const SpecmodeFunction *g,
                                      double *out_re,
                                      double *out_im);

/**
 * Squared overlap γ = |⟨f, g⟩|² of two normalized functions.
 *
 * # Safety
 *
 * `f` and `g` must be null or live function handles; `out_gamma` must be
 * null or valid for writing one double.
 */
SpecmodeStatus specmode_overlap_gamma(const SpecmodeFunction *f,
                                      const SpecmodeFunction *g,
                                      double *out_gamma);

/**
 * Hong–Ou–Mandel coincidence probability of one photon in `phi` meeting
 * one photon in `chi` on a balanced beamsplitter. Writes the squared
 * overlap γ and the simulated coincidence probability ½(1−γ).
 *
 * # Safety
 *
 * `phi` and `chi` must be null or live function handles; `out_gamma` and
 * `out_p_c` must be null or valid for writing one double each.
 */
SpecmodeStatus specmode_hom_coincidence(const SpecmodeFunction *phi,
                                        const SpecmodeFunction *chi,
                                        double *out_gamma,
                                        double *out_p_c);

/**
 * Four-photon interference (two identical pairs of pairwise overlap γ on a
 * balanced beamsplitter, all four photons postselected at one port).
 * Writes the simulated probability and the two- and four-photon
 * normalization factors of the underlying states.
 *
 * # Safety
 *
 * `grid` must be null or a live grid handle; `out_p_4a`, `out_n2` and
 * `out_n4` must be null or valid for writing one double each.
 */
SpecmodeStatus specmode_four_photon(const SpecmodeGrid *grid,
                                    double gamma,
                                    double *out_p_4a,
                                    double *out_n2,
                                    double *out_n4);

/**
 * Photon-number statistics behind a two-mode split with amplitude λ₁ on
 * the observed mode: writes the n+1 binomial probabilities P_0 … P_n into
 * `out_probabilities`, which must hold at least n+1 doubles.
 *
 * # Safety
 *
 * `out_probabilities` must be null or valid for writing n+1 doubles.
 */
SpecmodeStatus specmode_detector_statistics(size_t n,
                                            double lambda1_re,
                                            double lambda1_im,
                                            double *out_probabilities);

/**
 * Exchange-symmetry normalization factor 𝒩 of the product state placing
 * one photon in each of the `count` factor functions, all in one spatial
 * mode. `factors` must point to `count` non-null function handles.
 *
 * # Safety
 *
 * `factors` must be null or valid for reading `count` pointers, each null
 * or a live function handle; `out_value` must be null or valid for writing
 * one double.
 */
SpecmodeStatus specmode_normalization_product(const SpecmodeFunction *const *factors,
                                              size_t count,
                                              double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECMODE_H */
