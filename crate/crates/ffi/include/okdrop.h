#ifndef OKDROP_H
#define OKDROP_H

#pragma once

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum OkdropStatus {
  OKDROP_STATUS_OK = 0,
  OKDROP_STATUS_NULL_POINTER = 1,
  OKDROP_STATUS_INVALID_FIELD = 2,
  OKDROP_STATUS_DIMENSION_MISMATCH = 3,
  OKDROP_STATUS_INVALID_PARAMETER = 4,
  OKDROP_STATUS_CONSTRAINT_VIOLATION = 5,
  OKDROP_STATUS_NON_BINARY = 6,
  OKDROP_STATUS_SINGULAR_POINT = 7,
  OKDROP_STATUS_UNDER_RESOLVED = 8,
  OKDROP_STATUS_NEGATIVE_DENSITY = 9,
  OKDROP_STATUS_NOT_STAR_SHAPED = 10,
  OKDROP_STATUS_KERNEL_TRUNCATION = 11,
  OKDROP_STATUS_OVERLAP = 12,
  OKDROP_STATUS_DIVERGENCE = 13,
  OKDROP_STATUS_CONFIG = 14,
  OKDROP_STATUS_IO = 15,
  OKDROP_STATUS_JSON = 16,
  OKDROP_STATUS_BUFFER_TOO_SMALL = 17,
  OKDROP_STATUS_PANIC = 18,
} OkdropStatus;

// Opaque periodic field.
typedef struct OkdropField OkdropField;

// Opaque model parameters.
typedef struct OkdropParams OkdropParams;

typedef struct OkdropLimitMinimizer {
  double mbar;
  double vbar;
  double e0min;
} OkdropLimitMinimizer;

// Itemized energy as plain numbers.
typedef struct OkdropEnergy {
  double total;
  double interfacial;
  double well;
  double nonlocal;
  // `total · ε^{-4/3}`.
  double rescaled;
  double trivial_reference;
} OkdropEnergy;

typedef struct OkdropFlowOptions {
  size_t n;
  // Non-positive selects the default `0.1 ε²`.
  double dt;
  size_t max_steps;
  double grad_tol;
  uint64_t seed;
  double noise_amplitude;
} OkdropFlowOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *okdrop_version(void);

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call into the library on the same thread.
const char *okdrop_last_error(void);

// Quartic-well parameters.
//
// # Safety
// `out` must be valid for writing one pointer.
enum OkdropStatus okdrop_params_new(double eps,
                                    double lambda,
                                    double ell,
                                    struct OkdropParams **out);

// # Safety
// `p` is null or came from [`okdrop_params_new`] and was not freed.
void okdrop_params_free(struct OkdropParams *p);

// Background state `ū = -1 + λε^{2/3}`.
//
// # Safety
// `p` is a live handle, `out` writable.
enum OkdropStatus okdrop_params_ubar(const struct OkdropParams *p, double *out);

// Both ends of the `λ_c` bracket for the quartic well.
//
// # Safety
// `lower` and `upper` writable.
enum OkdropStatus okdrop_lambda_c_bracket(double *lower, double *upper);

// Closed-form minimizer of the limit energy.
//
// # Safety
// `out` writable.
enum OkdropStatus okdrop_e0_minimizer(double lambda,
                                      double ell,
                                      double kappa,
                                      double lambda_c,
                                      struct OkdropLimitMinimizer *out);

// Copies `len = n³` values (x fastest) into a new field.
//
// # Safety
// `values` readable for `len` doubles, `out` writable.
enum OkdropStatus okdrop_field_new(size_t n,
                                   double ell,
                                   const double *values,
                                   size_t len,
                                   struct OkdropField **out);

// # Safety
// `out` writable.
enum OkdropStatus okdrop_field_constant(size_t n,
                                        double ell,
                                        double value,
                                        struct OkdropField **out);

// # Safety
// `f` is null or a live field handle.
void okdrop_field_free(struct OkdropField *f);

// Grid points per axis, or 0 for a null handle.
//
// # Safety
// `f` is null or a live field handle.
size_t okdrop_field_n(const struct OkdropField *f);

// Copies the values out; `len` must be at least `n³`.
//
// # Safety
// `f` live, `buf` writable for `len` doubles.
enum OkdropStatus okdrop_field_copy_values(const struct OkdropField *f, double *buf, size_t len);

// Diffuse energy of `u`, whose mean must equal `ū`.
//
// # Safety
// Handles live, `out` writable.
enum OkdropStatus okdrop_diffuse_energy(const struct OkdropField *u,
                                        const struct OkdropParams *p,
                                        struct OkdropEnergy *out);

// Sharp-interface energy of a 0/1 field.
//
// # Safety
// Handles live, `out` writable.
enum OkdropStatus okdrop_sharp_energy(const struct OkdropField *chi,
                                      const struct OkdropParams *p,
                                      struct OkdropEnergy *out);

// Gradient flow from `ū` plus noise. On success `out_field` receives a new
// handle owned by the caller.
//
// # Safety
// Handles and option pointer live; output pointers writable.
enum OkdropStatus okdrop_minimize(const struct OkdropParams *p,
                                  const struct OkdropFlowOptions *options,
                                  struct OkdropField **out_field,
                                  struct OkdropEnergy *out_energy,
                                  bool *out_converged);

// Runs a JSON run config as the command-line tool would.
//
// # Safety
// `config_json` is a NUL-terminated string.
enum OkdropStatus okdrop_run_json(const char *config_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OKDROP_H */
