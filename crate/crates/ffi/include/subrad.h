#ifndef SUBRAD_H
#define SUBRAD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SUBRAD_KIND_LATTICE 0

#define SUBRAD_KIND_COMMENSURATE 1

#define SUBRAD_KIND_UNIFORM 2

typedef enum SubradStatus {
  SUBRAD_STATUS_OK = 0,
  SUBRAD_STATUS_NULL_POINTER = 1,
  SUBRAD_STATUS_INVALID_ARGUMENT = 2,
  SUBRAD_STATUS_SINGULAR = 3,
  SUBRAD_STATUS_NUMERICAL = 4,
  SUBRAD_STATUS_CONFIG = 5,
  SUBRAD_STATUS_IO = 6,
  SUBRAD_STATUS_PANIC = 7,
} SubradStatus;

/**
 * Opaque atomic configuration.
 */
typedef struct SubradEnsemble SubradEnsemble;

/**
 * Opaque system parameters.
 */
typedef struct SubradParams SubradParams;

/**
 * Opaque ensemble-averaged spectrum.
 */
typedef struct SubradSpectrum SubradSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *subrad_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *subrad_version(void);

/**
 * Default system parameters. Release with [`subrad_params_free`].
 */
struct SubradParams *subrad_params_new(void);

/**
 * # Safety
 * `params` must come from [`subrad_params_new`] and not be freed twice.
 */
void subrad_params_free(struct SubradParams *params);

/**
 * Fixes the coupling used in the amplitude (Hz).
 *
 * # Safety
 * `params` must be a live handle.
 */
enum SubradStatus subrad_params_set_coupling_hz(struct SubradParams *params, double coupling_hz);

/**
 * Coupling in use (Hz).
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum SubradStatus subrad_params_coupling_hz(const struct SubradParams *params, double *out);

/**
 * Draws one configuration of `n_atoms` atoms.
 *
 * # Safety
 * `params` must be a live handle and `out` writable. On success `*out`
 * owns a handle to release with [`subrad_ensemble_free`].
 */
enum SubradStatus subrad_ensemble_sample(const struct SubradParams *params,
                                         uint32_t kind,
                                         bool on_axis,
                                         size_t n_atoms,
                                         uint64_t seed,
                                         struct SubradEnsemble **out);

/**
 * # Safety
 * `ensemble` must come from [`subrad_ensemble_sample`] and not be freed twice.
 */
void subrad_ensemble_free(struct SubradEnsemble *ensemble);

/**
 * Number of atoms, or 0 for NULL.
 *
 * # Safety
 * `ensemble` must be NULL or a live handle.
 */
size_t subrad_ensemble_len(const struct SubradEnsemble *ensemble);

/**
 * Σ w² cos²(kx) of the configuration.
 *
 * # Safety
 * `ensemble` must be a live handle and `out` writable.
 */
enum SubradStatus subrad_ensemble_effective_atom_number(const struct SubradEnsemble *ensemble,
                                                        double *out);

/**
 * |α_y|² for one configuration at Δ_A = Δ_C = `delta_hz`.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum SubradStatus subrad_field_intensity(const struct SubradEnsemble *ensemble,
                                         const struct SubradParams *params,
                                         double eta_hz,
                                         double delta_hz,
                                         double *out);

/**
 * Monte Carlo y-channel spectrum on a symmetric grid of `points`
 * detunings spanning ±`half_span_hz`.
 *
 * # Safety
 * `params` must be a live handle and `out` writable. On success `*out`
 * owns a handle to release with [`subrad_spectrum_free`].
 */
enum SubradStatus subrad_sweep_spectrum(const struct SubradParams *params,
                                        uint32_t kind,
                                        bool on_axis,
                                        size_t n_atoms,
                                        double eta_hz,
                                        double half_span_hz,
                                        size_t points,
                                        size_t realizations,
                                        uint64_t seed,
                                        struct SubradSpectrum **out);

/**
 * # Safety
 * `spectrum` must come from [`subrad_sweep_spectrum`] and not be freed twice.
 */
void subrad_spectrum_free(struct SubradSpectrum *spectrum);

/**
 * Number of grid points, or 0 for NULL.
 *
 * # Safety
 * `spectrum` must be NULL or a live handle.
 */
size_t subrad_spectrum_len(const struct SubradSpectrum *spectrum);

/**
 * Copies detunings (Hz), mean intensities and their standard errors into
 * caller buffers of length `len`, which must equal the spectrum length.
 * Any buffer may be NULL to skip it.
 *
 * # Safety
 * Non-NULL buffers must hold `len` doubles.
 */
enum SubradStatus subrad_spectrum_copy(const struct SubradSpectrum *spectrum,
                                       double *detunings_hz,
                                       double *mean_intensity,
                                       double *intensity_sem,
                                       size_t len);

/**
 * Clebsch–Gordan coefficient ⟨2 m; 1 q | 3 m+q⟩.
 *
 * # Safety
 * `out` must be writable.
 */
enum SubradStatus subrad_cg_coefficient(int32_t m, int32_t q, double *out);

/**
 * Predicted peak count rate per µW of drive for detection efficiency `xi`.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum SubradStatus subrad_predicted_peak_rate_per_uw(const struct SubradParams *params,
                                                    double xi,
                                                    double *out);

/**
 * Runs a scenario from JSON config text, writing into `out_dir`.
 *
 * # Safety
 * Both arguments must be NUL-terminated UTF-8 strings.
 */
enum SubradStatus subrad_run_config(const char *config_json, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBRAD_H */
