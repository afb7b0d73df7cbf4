#ifndef PALEOLAB_H
#define PALEOLAB_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(PALEOLAB_BUILDING)
#define PALEOLAB_API __attribute__((visibility("default")))
#else
#define PALEOLAB_API
#endif

/* Status codes. Every call that can fail returns one of these; the message of
   the last failure on the calling thread is available from paleo_last_error. */
typedef enum paleo_status {
  PALEO_OK = 0,
  PALEO_INVALID_ARGUMENT = 1,
  PALEO_STRUCTURAL = 2,
  PALEO_CONFIG = 3,
  PALEO_CONTRACT = 4,
  PALEO_OUT_OF_DOMAIN = 5,
  PALEO_NODE_ENCOUNTER = 6,
  PALEO_PRE_CAUSTIC = 7,
  PALEO_NO_CONVERGENCE = 8,
  PALEO_INSUFFICIENT_DATA = 9,
  PALEO_IO = 10,
  PALEO_NO_CLASSICAL_PATH = 11,
  PALEO_CONJUGATE_POINT = 12,
  PALEO_HORIZON_TOO_SHORT = 13,
  PALEO_INTERNAL = 99
} paleo_status;

typedef struct paleo_scenario paleo_scenario;
typedef struct paleo_result paleo_result;

PALEOLAB_API const char* paleo_version(void);
PALEOLAB_API const char* paleo_status_name(paleo_status s);
/* Empty string when the last call on this thread succeeded. */
PALEOLAB_API const char* paleo_last_error(void);
/* Worker count for walker ensembles; 0 restores the hardware count. */
PALEOLAB_API paleo_status paleo_set_threads(int n);

/* Scenarios. load/parse only check the schema; validate applies the
   cross-field rules and builds the initial state. */
PALEOLAB_API paleo_status paleo_scenario_load(const char* path, paleo_scenario** out);
PALEOLAB_API paleo_status paleo_scenario_parse(const char* text, const char* origin, paleo_scenario** out);
/* "key=value"; a key that is the unique last component of a schema key may be
   given bare (dt for evolution.dt). */
PALEOLAB_API paleo_status paleo_scenario_override(paleo_scenario* s, const char* assignment);
PALEOLAB_API paleo_status paleo_scenario_set_seed(paleo_scenario* s, unsigned long long seed);
PALEOLAB_API paleo_status paleo_scenario_validate(paleo_scenario* s);
/* Copies the NUL-terminated effective config into buf. *needed receives the
   size including the terminator; a short buffer gives PALEO_INVALID_ARGUMENT. */
PALEOLAB_API paleo_status paleo_scenario_describe(const paleo_scenario* s, char* buf, size_t cap, size_t* needed);
PALEOLAB_API const char* paleo_scenario_name(const paleo_scenario* s);
PALEOLAB_API void paleo_scenario_free(paleo_scenario* s);

/* Validates, runs and writes the archive to out_root/<name> (NULL skips the
   archive). Failed checks are not an error: inspect the result. */
PALEOLAB_API paleo_status paleo_scenario_run(paleo_scenario* s, const char* out_root, paleo_result** out);

PALEOLAB_API int paleo_result_passed(const paleo_result* r);
PALEOLAB_API size_t paleo_result_check_count(const paleo_result* r);
/* Pointers stay valid until the result is freed. Any out pointer may be NULL. */
PALEOLAB_API paleo_status paleo_result_check(const paleo_result* r, size_t i, const char** name, double* value,
                                             double* tolerance, int* passed);
PALEOLAB_API paleo_status paleo_result_summary(const paleo_result* r, char* buf, size_t cap, size_t* needed);
/* Archive directory, or "" when none was written. */
PALEOLAB_API const char* paleo_result_archive(const paleo_result* r);
PALEOLAB_API void paleo_result_free(paleo_result* r);

#ifdef __cplusplus
}
#endif

#endif
