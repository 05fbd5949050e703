#ifndef KCONE_H
#define KCONE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KconeStatus {
  KCONE_STATUS_OK = 0,
  KCONE_STATUS_NULL_POINTER = 1,
  KCONE_STATUS_INVALID_UTF8 = 2,
  KCONE_STATUS_PARSE = 3,
  KCONE_STATUS_DIMENSION = 4,
  KCONE_STATUS_NUMERICAL = 5,
  KCONE_STATUS_UNSUPPORTED = 6,
  KCONE_STATUS_BUFFER_TOO_SMALL = 7,
  KCONE_STATUS_PANIC = 8,
} KconeStatus;

typedef enum KconeVerdictKind {
  KCONE_VERDICT_KIND_CONSISTENT = 0,
  KCONE_VERDICT_KIND_EXACT_TRUE = 1,
  KCONE_VERDICT_KIND_EXACT_FALSE = 2,
  KCONE_VERDICT_KIND_REFUTED = 3,
} KconeVerdictKind;

// Opaque cone handle.
typedef struct KconeCone KconeCone;

// Opaque map handle.
typedef struct KconeMap KconeMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *kcone_last_error(void);

// Static, NUL-terminated version string.
const char *kcone_version(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void kcone_string_free(char *s);

// Parses a named cone (`psd:2`, `spectral:3`, `orthant:4`, ...) or cone JSON.
//
// # Safety
// `spec` must be a NUL-terminated string; `out` must be writable.
enum KconeStatus kcone_cone_parse(const char *spec, struct KconeCone **out);

// # Safety
// `cone` must come from `kcone_cone_parse` (or be null) and not be freed twice.
void kcone_cone_free(struct KconeCone *cone);

// Embedded dimension of the cone's ambient space, 0 for null.
//
// # Safety
// `cone` must be a live handle or null.
size_t kcone_cone_dim(const struct KconeCone *cone);

// Cone as JSON.
//
// # Safety
// `cone` must be a live handle; `out` must be writable.
enum KconeStatus kcone_cone_to_json(const struct KconeCone *cone, char **out);

// New handle for the polar cone.
//
// # Safety
// `cone` must be a live handle; `out` must be writable.
enum KconeStatus kcone_cone_polar(const struct KconeCone *cone, struct KconeCone **out);

// Writes 1 to `inside` if the point lies in the cone, else 0.
//
// # Safety
// `coords` must hold `len` doubles; `inside` must be writable.
enum KconeStatus kcone_cone_contains(const struct KconeCone *cone,
                                     const double *coords,
                                     size_t len,
                                     double tol,
                                     int32_t *inside);

// Sampled or exact check of K ⊂ dual(K). `json` may be null.
//
// # Safety
// `cone` must be a live handle; `kind` must be writable.
enum KconeStatus kcone_cone_self_dual(const struct KconeCone *cone,
                                      size_t n_dirs,
                                      uint64_t seed,
                                      enum KconeVerdictKind *kind,
                                      char **json);

// Parses a named map (`gramhalf:2x2`, `inverse:2`, `xsq-y`, ...) or map JSON.
//
// # Safety
// `spec` must be a NUL-terminated string; `out` must be writable.
enum KconeStatus kcone_map_parse(const char *spec, struct KconeMap **out);

// # Safety
// `map` must come from `kcone_map_parse` (or be null) and not be freed twice.
void kcone_map_free(struct KconeMap *map);

// Input and output embedded dimensions.
//
// # Safety
// `map` must be a live handle; outputs must be writable.
enum KconeStatus kcone_map_dims(const struct KconeMap *map, size_t *input, size_t *output);

// Evaluates F(x) into `out` (capacity `out_len`, at least the output dimension).
//
// # Safety
// `x` must hold `len` doubles and `out` must hold `out_len`.
enum KconeStatus kcone_map_eval(const struct KconeMap *map,
                                const double *x,
                                size_t len,
                                double *out,
                                size_t out_len);

// K-convexity test of `map` against `cone`. `json` may be null.
//
// # Safety
// Handles must be live; `kind` must be writable.
enum KconeStatus kcone_check_k_convexity(const struct KconeMap *map,
                                         const struct KconeCone *cone,
                                         size_t budget,
                                         uint64_t seed,
                                         enum KconeVerdictKind *kind,
                                         char **json);

// Full epigraph-versus-hull report with default settings and `seed`.
// `kind` receives the overall verdict; `json` the report (may be null).
//
// # Safety
// Handles must be live; `kind` must be writable.
enum KconeStatus kcone_verify_epi_hull(const struct KconeMap *map,
                                       const struct KconeCone *cone,
                                       uint64_t seed,
                                       enum KconeVerdictKind *kind,
                                       char **json);

// Runs the command line given as a JSON array of arguments (without the
// program name). Writes the process exit code and the report text.
//
// # Safety
// `args_json` must be NUL-terminated; outputs must be writable.
enum KconeStatus kcone_run_cli(const char *args_json, int32_t *exit_code, char **report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KCONE_H */
