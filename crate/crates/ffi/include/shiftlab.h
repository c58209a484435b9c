#ifndef SHIFTLAB_H
#define SHIFTLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum ShlStatus {
  SHL_STATUS_OK = 0,
  SHL_STATUS_NULL_POINTER = 1,
  SHL_STATUS_UTF8 = 2,
  SHL_STATUS_PARSE = 3,
  SHL_STATUS_INVALID = 4,
  SHL_STATUS_BUDGET = 5,
  SHL_STATUS_NUMERIC = 6,
  SHL_STATUS_IO = 7,
  SHL_STATUS_PANIC = 8,
} ShlStatus;

// A parsed form system with its shift expansion.
typedef struct ShlSystem ShlSystem;

// Output of [`shl_count`].
typedef struct ShlCount {
  uint64_t count;
  // Points whose membership could not be decided at working precision.
  uint64_t boundary_flags;
  // 0 generic, 1 meet-in-the-middle.
  uint32_t method;
} ShlCount;

// Output of [`shl_density`].
typedef struct ShlDensity {
  double c;
  double std_error;
  bool converged;
} ShlDensity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or null. Valid until the next
// call into this library from the same thread.
const char *shl_last_error(void);

// Library version as a static nul-terminated string.
const char *shl_version(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void shl_string_free(char *s);

// Parses a system document `{n, d, forms, sigma}`.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
enum ShlStatus shl_system_from_json(const char *json, struct ShlSystem **out);

// Releases a system. Null is ignored.
//
// # Safety
// `sys` must come from [`shl_system_from_json`] and not have been freed.
void shl_system_free(struct ShlSystem *sys);

// Number of variables, degree and number of forms.
//
// # Safety
// `sys` must be a live handle; the outputs must be writable.
enum ShlStatus shl_system_dims(const struct ShlSystem *sys, uint64_t *n, uint32_t *d, uint64_t *r);

// Hypothesis report as JSON; free with [`shl_string_free`]. `passed` is set
// when every condition holds.
//
// # Safety
// `sys` must be a live handle; the outputs must be writable.
enum ShlStatus shl_hypotheses_json(const struct ShlSystem *sys,
                                   uint64_t seed,
                                   bool *passed,
                                   char **out);

// Counts `x` in `[-P, P]^n` with `|f_k(x + mu) - tau_k| < eta` for every `k`.
//
// `mu_kind` is `rational`, `quadratic` or `decimal`; `tau` holds `r` rational
// literals; `method` is `generic`, `mitm` or `auto` (null means auto);
// `budget` 0 selects the default point budget.
//
// # Safety
// String arguments must be nul-terminated; `tau` must hold `tau_len` of them.
enum ShlStatus shl_count(const struct ShlSystem *sys,
                         const char *mu_kind,
                         const char *mu_literal,
                         const char *const *tau,
                         size_t tau_len,
                         const char *eta,
                         uint64_t p,
                         const char *method,
                         uint64_t budget,
                         struct ShlCount *out);

// Real density of the unshifted system by randomized quasi-Monte Carlo.
// `samples_per_shift` 0 selects the default.
//
// # Safety
// `sys` must be a live handle; `out` must be writable.
enum ShlStatus shl_density(const struct ShlSystem *sys,
                           uint64_t seed,
                           uint64_t samples_per_shift,
                           struct ShlDensity *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHIFTLAB_H */
