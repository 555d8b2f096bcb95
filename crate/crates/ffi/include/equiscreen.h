#ifndef EQUISCREEN_H
#define EQUISCREEN_H

#include <stdint.h>
#include <stddef.h>

typedef enum EsStatus {
  ES_STATUS_OK = 0,
  ES_STATUS_NULL_ARGUMENT = 1,
  ES_STATUS_INVALID_UTF8 = 2,
  ES_STATUS_PARSE = 3,
  ES_STATUS_INVALID_SCENARIO = 4,
  ES_STATUS_CONSTRUCTION = 5,
  ES_STATUS_NOT_APPLICABLE = 6,
  ES_STATUS_BUFFER_TOO_SMALL = 7,
  ES_STATUS_PANIC = 8,
} EsStatus;

// Mechanism built from a scenario.
typedef struct EsMechanism EsMechanism;

// Parsed scenario.
typedef struct EsScenario EsScenario;

// Library version as a static NUL-terminated string.
const char *es_version(void);

// Copies the calling thread's last error message into `buf` (NUL-terminated).
// `*needed` receives the required size including the terminator.
//
// # Safety
// `buf` must be writable for `len` bytes; `needed` may be null.
enum EsStatus es_last_error(char *buf, size_t len, size_t *needed);

// Parses scenario text. `overrides` is an array of `n_overrides`
// `section.key=value` strings and may be null when `n_overrides` is 0.
//
// # Safety
// All pointers must be valid; `out` receives a handle owned by the caller.
enum EsStatus es_scenario_parse(const char *text_ptr,
                                const char *const *overrides,
                                size_t n_overrides,
                                struct EsScenario **out);

// # Safety
// `s` must come from `es_scenario_parse` and not be used afterwards; null is ignored.
void es_scenario_free(struct EsScenario *s);

// Builds the mechanism the scenario configures.
//
// # Safety
// `s` must be a live scenario handle and `out` writable.
enum EsStatus es_mechanism_build(const struct EsScenario *s, struct EsMechanism **out);

// # Safety
// `m` must come from `es_mechanism_build` and not be used afterwards; null is ignored.
void es_mechanism_free(struct EsMechanism *m);

// Bundle `(x, p, q)` assigned to type `(alpha, beta)`.
//
// # Safety
// `m` must be a live mechanism handle; the outputs must be writable.
enum EsStatus es_mechanism_bundle(const struct EsMechanism *m,
                                  double alpha,
                                  double beta,
                                  double *x,
                                  double *p,
                                  double *q);

// Runs the verification suite and returns the JSON report in `*json`
// (release with `es_string_free`); `*pass` receives 1 if every check passed.
//
// # Safety
// `s` must be a live scenario handle; `json` and `pass` must be writable.
enum EsStatus es_verify(const struct EsScenario *s, uint64_t seed, char **json, int32_t *pass);

// # Safety
// `p` must come from this library and not be used afterwards; null is ignored.
void es_string_free(char *p);

// Angle in `[0, pi)` of a line with slope `m`; infinite slopes give `pi/2`.
double es_angle(double m);

#endif  /* EQUISCREEN_H */
