#ifndef SLOWLIGHT_H
#define SLOWLIGHT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlCouplingKind {
  // Cell-averaged coupling `ḡ` of the continuum model.
  SL_COUPLING_KIND_EFFECTIVE = 0,
  // Peak coupling `g` with a Gaussian Wannier profile of width `z0`.
  SL_COUPLING_KIND_FULL = 1,
} SlCouplingKind;

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_ARGUMENT = 2,
  SL_STATUS_BAND = 3,
  SL_STATUS_DYNAMICS = 4,
  SL_STATUS_EMISSION = 5,
  SL_STATUS_SPECTRAL = 6,
  SL_STATUS_PLATFORM = 7,
  SL_STATUS_BUFFER_TOO_SMALL = 8,
  SL_STATUS_PANIC = 9,
} SlStatus;

// Band parameters `J`, `a` and photon loss `γ_p`.
typedef struct SlBand SlBand;

// Time series returned by [`sl_simulation_run`].
typedef struct SlResult SlResult;

// A simulation under construction: settings plus the atoms added so far.
typedef struct SlSimulation SlSimulation;

// Bound states above and below the tilted band. A missing state has
// `has_* == false` and NaN fields.
typedef struct SlBoundStates {
  bool has_upper;
  double omega_upper;
  double atom_weight_upper;
  bool has_lower;
  double omega_lower;
  double atom_weight_lower;
} SlBoundStates;

// Modulated-fiber design inputs, SI units, angular frequencies in rad/s.
typedef struct SlFiberParams {
  double radius;
  double refractive_index;
  double cutoff_frequency;
  double modulation;
  double period;
} SlFiberParams;

typedef struct SlFiberBand {
  // `J` (rad/s).
  double hopping;
  // `c̄ = 2Ja` (m/s).
  double cbar;
  // Band-edge shift between plane-wave cutoffs, relative to the bandwidth.
  double convergence;
} SlFiberBand;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if it succeeded.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *sl_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sl_version(void);

// # Safety
// `out` must be null or point to writable storage for a handle.
enum SlStatus sl_band_new(double hopping,
                          double lattice_constant,
                          double photon_loss,
                          struct SlBand **out);

// # Safety
// `band` must be null or a handle from [`sl_band_new`] not yet freed.
void sl_band_free(struct SlBand *band);

// `ω̃_k = -2J cos(ka) - v k` for `k` in the zone `(-π/a, π/a]`.
//
// # Safety
// Pointers must be null or valid.
enum SlStatus sl_tilted_dispersion(const struct SlBand *band,
                                   double velocity,
                                   double k,
                                   double *out);

// Left and right emission rates at detuning `delta` and velocity `velocity`.
//
// # Safety
// Pointers must be null or valid.
enum SlStatus sl_emission_rates(const struct SlBand *band,
                                double delta,
                                double velocity,
                                double gbar,
                                double broadening,
                                double *gamma_left,
                                double *gamma_right);

// Directionality `D = (Γ_L - Γ_R)/(Γ_L + Γ_R)`. When the atom does not
// radiate, `*off_band` is set and `*d` is NaN.
//
// # Safety
// Pointers must be null or valid.
enum SlStatus sl_directionality(const struct SlBand *band,
                                double delta,
                                double velocity,
                                double gbar,
                                double broadening,
                                double *d,
                                bool *off_band);

// Smallest `|v|/c̄` for which the continuum model is valid at `delta`.
//
// # Safety
// Pointers must be null or valid.
enum SlStatus sl_validity_min_velocity(const struct SlBand *band, double delta, double *out);

// # Safety
// Pointers must be null or valid.
enum SlStatus sl_bound_states(const struct SlBand *band,
                              double delta,
                              double velocity,
                              double gbar,
                              struct SlBoundStates *out);

// `Ω_c` and `Γ_c` at the critical point `v = c̄`, `δ = -πJ`.
//
// # Safety
// Pointers must be null or valid.
enum SlStatus sl_critical_rates(double gbar, double hopping, double *omega_c, double *gamma_c);

// Lowest axial band of a modulated fiber.
//
// # Safety
// Pointers must be null or valid.
enum SlStatus sl_fiber_band(const struct SlFiberParams *params, struct SlFiberBand *out);

// Starts a simulation. `strength` is `ḡ` for the effective coupling and
// `g` for the full one; `z0` is ignored for the effective coupling.
// `n_sites == 0` sizes the ring from the light cone of `t_max`.
//
// # Safety
// Pointers must be null or valid.
enum SlStatus sl_simulation_new(const struct SlBand *band,
                                enum SlCouplingKind kind,
                                double strength,
                                double z0,
                                size_t n_sites,
                                double t_max,
                                double dt,
                                size_t stride,
                                struct SlSimulation **out);

// Adds an atom moving as `z(t) = position + velocity t`. The first atom
// added starts in the excited state.
//
// # Safety
// `sim` must be null or a live handle.
enum SlStatus sl_simulation_add_atom(struct SlSimulation *sim,
                                     double detuning,
                                     double position,
                                     double velocity,
                                     double atomic_loss);

// Runs the simulation; the handle stays usable afterwards.
//
// # Safety
// Pointers must be null or valid.
enum SlStatus sl_simulation_run(const struct SlSimulation *sim, struct SlResult **out);

// # Safety
// `sim` must be null or a handle not yet freed.
void sl_simulation_free(struct SlSimulation *sim);

// Number of time samples and atoms in a result.
//
// # Safety
// Pointers must be null or valid.
enum SlStatus sl_result_shape(const struct SlResult *result, size_t *samples, size_t *atoms);

// Copies the sample times into `buffer` (at least `samples` long).
//
// # Safety
// `buffer` must be valid for `len` writes.
enum SlStatus sl_result_times(const struct SlResult *result, double *buffer, size_t len);

// Copies `p_e(t)` of atom `atom` (0-based) into `buffer`.
//
// # Safety
// `buffer` must be valid for `len` writes.
enum SlStatus sl_result_populations(const struct SlResult *result,
                                    size_t atom,
                                    double *buffer,
                                    size_t len);

// Copies the total norm series into `buffer`.
//
// # Safety
// `buffer` must be valid for `len` writes.
enum SlStatus sl_result_norm(const struct SlResult *result, double *buffer, size_t len);

// # Safety
// `result` must be null or a handle not yet freed.
void sl_result_free(struct SlResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLOWLIGHT_H */
