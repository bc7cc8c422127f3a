#ifndef SKSPLINE_H
#define SKSPLINE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. `SK_STATUS_OK` is zero; every other value is an error.
typedef enum SkStatus {
  SK_STATUS_OK = 0,
  SK_STATUS_NULL_POINTER = 1,
  SK_STATUS_INVALID_INPUT = 2,
  SK_STATUS_DIMENSION_MISMATCH = 3,
  SK_STATUS_SINGULAR_MATRIX = 4,
  SK_STATUS_SIZE_OVERFLOW = 5,
  SK_STATUS_DEGENERATE_SYMBOL = 6,
  SK_STATUS_RECONSTRUCTION_FAILURE = 7,
  SK_STATUS_ILL_CONDITIONED = 8,
  SK_STATUS_PANIC = 9,
} SkStatus;

// A fundamental spline with its coefficient table.
typedef struct SkFundamental SkFundamental;

// An interpolant of lattice samples.
typedef struct SkInterpolant SkInterpolant;

// A Gaussian kernel `exp(-|B x|^2)`.
typedef struct SkKernel SkKernel;

// A lattice `A Z^n`.
typedef struct SkLattice SkLattice;

// The periodized symbol of a kernel on a lattice.
typedef struct SkSymbol SkSymbol;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Description of the most recent failure on this thread, or null if the
// last call succeeded. Valid until the next call into this library.
const char *sk_last_error_message(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from this library and not have been freed.
void sk_string_free(char *s);

// # Safety
// `generator` must point to `dim * dim` doubles; `out` must be writable.
enum SkStatus sk_lattice_new(size_t dim, const double *generator, struct SkLattice **out);

// # Safety
// `lattice` must be null or a live handle.
void sk_lattice_free(struct SkLattice *lattice);

// # Safety
// `lattice` must be a live handle; `out` must be writable.
enum SkStatus sk_lattice_abs_det(const struct SkLattice *lattice, double *out);

// # Safety
// `shape` must point to `dim * dim` doubles; `out` must be writable.
enum SkStatus sk_kernel_gaussian_new(size_t dim, const double *shape, struct SkKernel **out);

// # Safety
// `kernel` must be null or a live handle.
void sk_kernel_free(struct SkKernel *kernel);

// `K(x)`.
//
// # Safety
// `x` must point to `len` doubles; `out` must be writable.
enum SkStatus sk_kernel_eval(const struct SkKernel *kernel,
                             const double *x,
                             size_t len,
                             double *out);

// `F(K)(z) = ∫ exp(-i⟨x, z⟩) K(x) dx`.
//
// # Safety
// `z` must point to `len` doubles; `out` must be writable.
enum SkStatus sk_kernel_fourier(const struct SkKernel *kernel,
                                const double *z,
                                size_t len,
                                double *out);

// # Safety
// Both handles must be live; `out` must be writable.
enum SkStatus sk_symbol_new(const struct SkLattice *lattice,
                            const struct SkKernel *kernel,
                            struct SkSymbol **out);

// # Safety
// `symbol` must be null or a live handle.
void sk_symbol_free(struct SkSymbol *symbol);

// The inverse symbol summed over dual-lattice shifts of the transform.
//
// # Safety
// `z` must point to `len` doubles; `out` must be writable.
enum SkStatus sk_symbol_inverse_frequency(const struct SkSymbol *symbol,
                                          const double *z,
                                          size_t len,
                                          double *out);

// The inverse symbol as a lattice series; real and imaginary parts.
//
// # Safety
// `z` must point to `len` doubles; `re` and `im` must be writable.
enum SkStatus sk_symbol_inverse_spatial(const struct SkSymbol *symbol,
                                        const double *z,
                                        size_t len,
                                        double *re,
                                        double *im);

// # Safety
// Both handles must be live; `out` must be writable.
enum SkStatus sk_fundamental_new(const struct SkLattice *lattice,
                                 const struct SkKernel *kernel,
                                 size_t grid_size,
                                 struct SkFundamental **out);

// # Safety
// `fundamental` must be null or a live handle.
void sk_fundamental_free(struct SkFundamental *fundamental);

// # Safety
// `x` must point to `len` doubles; `out` must be writable.
enum SkStatus sk_fundamental_eval(const struct SkFundamental *fundamental,
                                  const double *x,
                                  size_t len,
                                  double *out);

// Max deviation from 1 at the origin and 0 at the other lattice points with `|m|_∞ <= radius`.
//
// # Safety
// `fundamental` must be a live handle; `out` must be writable.
enum SkStatus sk_fundamental_cardinality_residual(const struct SkFundamental *fundamental,
                                                  size_t radius,
                                                  double *out);

// Largest `|s|_∞` held in the coefficient table.
//
// # Safety
// `fundamental` must be a live handle; `out` must be writable.
enum SkStatus sk_fundamental_table_radius(const struct SkFundamental *fundamental, size_t *out);

// The coefficient `α_s`; `InvalidInput` if `s` is outside the table.
//
// # Safety
// `s` must point to `len` integers; `out` must be writable.
enum SkStatus sk_fundamental_coefficient(const struct SkFundamental *fundamental,
                                         const int64_t *s,
                                         size_t len,
                                         double *out);

// The coefficient table as JSON; release with [`sk_string_free`].
//
// # Safety
// `fundamental` must be a live handle; `out` must be writable.
enum SkStatus sk_fundamental_coefficients_json(const struct SkFundamental *fundamental, char **out);

// Interpolates `values`, given in lexicographic order of the index box
// `|s|_∞ <= radius` (last coordinate fastest).
//
// # Safety
// `values` must point to `count` doubles; `out` must be writable.
enum SkStatus sk_interpolant_new(const struct SkFundamental *fundamental,
                                 size_t radius,
                                 const double *values,
                                 size_t count,
                                 struct SkInterpolant **out);

// # Safety
// `interpolant` must be null or a live handle.
void sk_interpolant_free(struct SkInterpolant *interpolant);

// # Safety
// `x` must point to `len` doubles; `out` must be writable.
enum SkStatus sk_interpolant_eval(const struct SkInterpolant *interpolant,
                                  const double *x,
                                  size_t len,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKSPLINE_H */
