#ifndef DFKIT_H
#define DFKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DFK_ANALYZE_QUALITATIVE 1

#define DFK_ANALYZE_SIMULATE 2

#define DFK_ANALYZE_UNSTABLE_ELLIPSES 4

typedef enum DfkStatus {
  DFK_STATUS_OK = 0,
  DFK_STATUS_NULL_POINTER = 1,
  DFK_STATUS_INVALID_ARGUMENT = 2,
  DFK_STATUS_INVALID_NONLINEARITY = 3,
  DFK_STATUS_INVALID_PLANT = 4,
  DFK_STATUS_DOMAIN = 5,
  DFK_STATUS_NUMERICAL = 6,
  DFK_STATUS_AMBIGUOUS = 7,
  DFK_STATUS_BUFFER_TOO_SMALL = 8,
  DFK_STATUS_PANIC = 9,
} DfkStatus;

typedef enum DfkStability {
  DFK_STABILITY_STABLE = 0,
  DFK_STABILITY_UNSTABLE = 1,
} DfkStability;

// Opaque nonlinearity handle.
typedef struct DfkNonlinearity DfkNonlinearity;

// Opaque plant handle.
typedef struct DfkPlant DfkPlant;

typedef struct DfkCrossover {
  double omega;
  double gain_margin;
} DfkCrossover;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; empty if none. Owned by the library.
const char *dfk_last_error(void);

// Nonlinearity through the points `(x[i], y[i])`, `i < n`.
//
// # Safety
// `x` and `y` must point to `n` doubles; `out` must be writable.
enum DfkStatus dfk_nonlinearity_new(const double *x,
                                    const double *y,
                                    size_t n,
                                    struct DfkNonlinearity **out);

// Nonlinearity from its JSON descriptor `{"x": [..], "y": [..]}`.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
enum DfkStatus dfk_nonlinearity_from_json(const char *json, struct DfkNonlinearity **out);

// # Safety
// `nl` must come from a `dfk_nonlinearity_*` constructor and not be used afterwards. Null is ignored.
void dfk_nonlinearity_free(struct DfkNonlinearity *nl);

// `y(x)`.
//
// # Safety
// `nl` must be a live handle; `out` must be writable.
enum DfkStatus dfk_nonlinearity_eval(const struct DfkNonlinearity *nl, double x, double *out);

// Exact describing function on `grid[0..n]` (strictly increasing) into `out[0..n]`.
//
// # Safety
// `nl` must be a live handle; `grid` and `out` must hold `n` doubles.
enum DfkStatus dfk_df_exact(const struct DfkNonlinearity *nl,
                            const double *grid,
                            size_t n,
                            double *out);

// Qualitative describing function; same contract as `dfk_df_exact`.
//
// # Safety
// As `dfk_df_exact`.
enum DfkStatus dfk_df_qualitative(const struct DfkNonlinearity *nl,
                                  const double *grid,
                                  size_t n,
                                  double *out);

// Describing function by numerical quadrature; same contract as `dfk_df_exact`.
//
// # Safety
// As `dfk_df_exact`.
enum DfkStatus dfk_df_oracle(const struct DfkNonlinearity *nl,
                             const double *grid,
                             size_t n,
                             double *out);

// `G(s) = k num(s) / den(s)`, coefficients in descending powers.
//
// # Safety
// `num` and `den` must hold `num_len` and `den_len` doubles; `out` must be writable.
enum DfkStatus dfk_plant_new(const double *num,
                             size_t num_len,
                             const double *den,
                             size_t den_len,
                             double k,
                             struct DfkPlant **out);

// # Safety
// `plant` must come from `dfk_plant_new` and not be used afterwards. Null is ignored.
void dfk_plant_free(struct DfkPlant *plant);

// `G(j omega)`.
//
// # Safety
// `plant` must be a live handle; `re` and `im` must be writable.
enum DfkStatus dfk_plant_freq_response(const struct DfkPlant *plant,
                                       double omega,
                                       double *re,
                                       double *im);

// Negative-real-axis crossings in `[omega_min, omega_max]`.
//
// `*count` receives the number found; on `DFK_STATUS_BUFFER_TOO_SMALL` nothing
// else is written and the call can be repeated with `cap >= *count`.
//
// # Safety
// `plant` must be a live handle; `out` must hold `cap` entries; `count` must be writable.
enum DfkStatus dfk_phase_crossovers(const struct DfkPlant *plant,
                                    double omega_min,
                                    double omega_max,
                                    struct DfkCrossover *out,
                                    size_t cap,
                                    size_t *count);

// Amplitudes `X` with `F(X) = kbar`, ascending. `qualitative != 0` selects the
// qualitative curve. Buffer protocol as `dfk_phase_crossovers`.
//
// # Safety
// `nl` must be a live handle; `out` must hold `cap` doubles; `count` must be writable.
enum DfkStatus dfk_find_intersections(const struct DfkNonlinearity *nl,
                                      int qualitative,
                                      double kbar,
                                      double *out,
                                      size_t cap,
                                      size_t *count);

// Stability of the cycle at `amplitude` on the crossover `omega`.
//
// # Safety
// `plant` and `nl` must be live handles; `out` must be writable.
enum DfkStatus dfk_classify(const struct DfkPlant *plant,
                            const struct DfkNonlinearity *nl,
                            int qualitative,
                            double amplitude,
                            double omega,
                            enum DfkStability *out);

// Full analysis report as JSON, the same document `dfkit analyze` writes.
// `flags` combines the `DFK_ANALYZE_*` bits. Free `*out_json` with `dfk_string_free`.
//
// # Safety
// `nl` and `plant` must be live handles; `out_json` must be writable.
enum DfkStatus dfk_analyze_json(const struct DfkNonlinearity *nl,
                                const struct DfkPlant *plant,
                                int flags,
                                char **out_json);

// # Safety
// `s` must come from this library and not be used afterwards. Null is ignored.
void dfk_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DFKIT_H */
