#ifndef COUPLED_RIS_H
#define COUPLED_RIS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CrisStatus {
  CRIS_STATUS_OK = 0,
  CRIS_STATUS_NULL_POINTER = 1,
  CRIS_STATUS_INVALID_INPUT = 2,
  CRIS_STATUS_DIMENSION = 3,
  CRIS_STATUS_SINGULAR = 4,
  CRIS_STATUS_NOT_POSITIVE_DEFINITE = 5,
  CRIS_STATUS_GEOMETRY = 6,
  CRIS_STATUS_PASSIVITY = 7,
  // Alignment, Cayley pole, quadrature or degenerate-channel failure.
  CRIS_STATUS_NUMERICAL = 8,
  CRIS_STATUS_PANIC = 9,
} CrisStatus;

typedef enum CrisArchitecture {
  CRIS_ARCHITECTURE_FULLY_CONNECTED = 0,
  CRIS_ARCHITECTURE_TREE_TRIDIAGONAL = 1,
  CRIS_ARCHITECTURE_DIAGONAL = 2,
} CrisArchitecture;

typedef enum CrisLoadKind {
  // Ohms.
  CRIS_LOAD_KIND_REACTANCE = 0,
  // Siemens.
  CRIS_LOAD_KIND_SUSCEPTANCE = 1,
} CrisLoadKind;

// Opaque coupling handle.
typedef struct CrisCoupling CrisCoupling;

// Array template for [`cris_coupling_from_dipoles`].
typedef struct CrisGeometry {
  // Elements per row; arrays smaller than this use a single row.
  size_t n_x;
  double frequency_hz;
  double dipole_length_wl;
  double wire_radius_wl;
} CrisGeometry;

typedef struct CrisComplex {
  double re;
  double im;
} CrisComplex;

typedef struct CrisResult {
  // `|h|²` under the handle's coupling.
  double gain_linear;
  // `|h|²` under the coupling the load was designed for.
  double design_gain;
  // Upper bound under the handle's coupling.
  double bound_linear;
  double residual;
  enum CrisLoadKind load_kind;
  bool degenerate;
} CrisResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next call into this library on the same thread.
const char *cris_last_error(void);

// Default array template (8 elements per row, 28 GHz, quarter-wave dipoles).
struct CrisGeometry cris_geometry_default(void);

// Builds the dipole coupling of `n` elements at `spacing_wl` wavelengths.
// `geometry` may be NULL for the default template.
//
// # Safety
// `geometry` is NULL or points to a valid `CrisGeometry`; `out` is valid for writes.
enum CrisStatus cris_coupling_from_dipoles(size_t n,
                                           double spacing_wl,
                                           const struct CrisGeometry *geometry,
                                           struct CrisComplex self_impedance,
                                           struct CrisCoupling **out);

// Wraps a row-major `n × n` impedance matrix in ohms.
//
// # Safety
// `values` holds `n * n` readable entries; `out` is valid for writes.
enum CrisStatus cris_coupling_from_matrix(size_t n,
                                          const struct CrisComplex *values,
                                          struct CrisCoupling **out);

// Releases a handle. NULL is ignored.
//
// # Safety
// `handle` is NULL or was returned by this library and not yet freed.
void cris_coupling_free(struct CrisCoupling *handle);

// Number of elements, or 0 for NULL.
//
// # Safety
// `handle` is NULL or a live handle.
size_t cris_coupling_size(const struct CrisCoupling *handle);

// Copies the impedance matrix row-major into `out`, which has room for `len`
// entries (at least `n * n`).
//
// # Safety
// `handle` is a live handle; `out` is valid for `len` writes.
enum CrisStatus cris_coupling_copy(const struct CrisCoupling *handle,
                                   struct CrisComplex *out,
                                   size_t len);

// Extreme eigenvalues of the real part of the coupling.
//
// # Safety
// `handle` is a live handle; the outputs are valid for writes.
enum CrisStatus cris_coupling_eigen_extremes(const struct CrisCoupling *handle,
                                             double *lambda_min,
                                             double *lambda_max);

// Optimises the RIS for a channel of `handle.size()` elements. With
// `aware == false` the load is designed for `z0 I` and evaluated under the
// handle's coupling. `load_out` is NULL or has room for `n * n` values and
// receives the load row-major.
//
// # Safety
// Channel arrays hold `n` entries; `result` is valid for writes; `load_out`
// is NULL or valid for `n * n` writes.
enum CrisStatus cris_optimize(const struct CrisCoupling *handle,
                              size_t n,
                              const struct CrisComplex *ris_to_rx,
                              const struct CrisComplex *tx_to_ris,
                              struct CrisComplex direct,
                              enum CrisArchitecture architecture,
                              bool aware,
                              double z0,
                              double *load_out,
                              struct CrisResult *result);

// Channel-gain upper bound of any BD-RIS under the handle's coupling.
//
// # Safety
// Channel arrays hold `n` entries; `out` is valid for writes.
enum CrisStatus cris_upper_bound(const struct CrisCoupling *handle,
                                 size_t n,
                                 const struct CrisComplex *ris_to_rx,
                                 const struct CrisComplex *tx_to_ris,
                                 struct CrisComplex direct,
                                 double z0,
                                 double *out);

// Average optimal gain under Rayleigh fading with the handle's coupling.
//
// # Safety
// `handle` is a live handle; `out` is valid for writes.
enum CrisStatus cris_scaling_mc(const struct CrisCoupling *handle,
                                double rho_ri,
                                double rho_it,
                                double z0,
                                double *out);

// Average optimal gain under Rayleigh fading without coupling, for `n`
// elements of self-resistance `r_self`.
//
// # Safety
// `out` is valid for writes.
enum CrisStatus cris_scaling_nomc(size_t n,
                                  double r_self,
                                  double rho_ri,
                                  double rho_it,
                                  double z0,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COUPLED_RIS_H */
