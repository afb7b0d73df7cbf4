#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "paleolab/paleolab.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static const char* kGround =
    "name = capi_ground\n"
    "analyses = energy-balance\n"
    "[grid]\n"
    "lo = -6\n"
    "hi = 6\n"
    "n = 512\n"
    "boundary = dirichlet\n"
    "[evolution]\n"
    "integrator = crank-nicolson\n"
    "t_final = 0\n"
    "[potential]\n"
    "kind = harmonic\n"
    "[state]\n"
    "kind = eigenstate\n";

static void test_status_names(void) {
  EXPECT(strcmp(paleo_status_name(PALEO_OK), "ok") == 0);
  EXPECT(strlen(paleo_status_name(PALEO_CONFIG)) > 0);
  EXPECT(strcmp(paleo_status_name((paleo_status)77), "unknown") == 0);
  EXPECT(strlen(paleo_version()) > 0);
}

static void test_parse_errors(void) {
  paleo_scenario* s = NULL;
  EXPECT(paleo_scenario_parse("name = x\nbogus = 1\n", "inline", &s) == PALEO_CONFIG);
  EXPECT(s == NULL);
  EXPECT(strstr(paleo_last_error(), "inline:2") != NULL);
  EXPECT(strstr(paleo_last_error(), "bogus") != NULL);

  EXPECT(paleo_scenario_load("/nonexistent/scenario.cfg", &s) == PALEO_CONFIG);
  EXPECT(paleo_scenario_parse(NULL, NULL, &s) == PALEO_INVALID_ARGUMENT);

  EXPECT(paleo_scenario_parse("name = w\nanalyses = wallstrom\n", NULL, &s) == PALEO_OK);
  EXPECT(strlen(paleo_last_error()) == 0);
  EXPECT(paleo_scenario_validate(s) == PALEO_CONFIG);
  EXPECT(strstr(paleo_last_error(), "wallstrom requires dim=2") != NULL);
  EXPECT(paleo_scenario_override(s, "grid.dim=3") == PALEO_OK);
  EXPECT(paleo_scenario_validate(s) == PALEO_CONFIG);
  EXPECT(paleo_scenario_override(s, "tolerance=1") == PALEO_CONFIG);
  paleo_scenario_free(s);
}

static void test_describe(void) {
  paleo_scenario* s = NULL;
  size_t need = 0;
  char small[8];
  EXPECT(paleo_scenario_parse(kGround, "ground", &s) == PALEO_OK);
  EXPECT(paleo_scenario_override(s, "dt=5e-4") == PALEO_OK);
  EXPECT(paleo_scenario_describe(s, NULL, 0, &need) == PALEO_OK);
  EXPECT(need > 100);
  EXPECT(paleo_scenario_describe(s, small, sizeof small, &need) == PALEO_INVALID_ARGUMENT);
  char* buf = malloc(need);
  EXPECT(paleo_scenario_describe(s, buf, need, &need) == PALEO_OK);
  EXPECT(strstr(buf, "evolution.dt = 5e-4\n") != NULL);
  EXPECT(strstr(buf, "analysis.energy-balance.tolerance = 1e-4\n") != NULL);
  free(buf);
  paleo_scenario_free(s);
}

static void test_run(void) {
  paleo_scenario* s = NULL;
  paleo_result* r = NULL;
  EXPECT(paleo_scenario_parse(kGround, "ground", &s) == PALEO_OK);
  EXPECT(paleo_scenario_validate(s) == PALEO_OK);
  EXPECT(strcmp(paleo_scenario_name(s), "capi_ground") == 0);
  EXPECT(paleo_scenario_run(s, NULL, &r) == PALEO_OK);
  EXPECT(paleo_result_passed(r) == 1);
  EXPECT(paleo_result_check_count(r) == 1);
  const char* name = NULL;
  double value = -1.0, tol = 0.0;
  int passed = 0;
  EXPECT(paleo_result_check(r, 0, &name, &value, &tol, &passed) == PALEO_OK);
  EXPECT(strcmp(name, "energy-balance.residual") == 0);
  EXPECT(value >= 0.0 && value <= tol);
  EXPECT(tol == 1e-4);
  EXPECT(passed == 1);
  EXPECT(paleo_result_check(r, 5, NULL, NULL, NULL, NULL) == PALEO_INVALID_ARGUMENT);
  EXPECT(strcmp(paleo_result_archive(r), "") == 0);
  size_t need = 0;
  EXPECT(paleo_result_summary(r, NULL, 0, &need) == PALEO_OK);
  char* buf = malloc(need);
  EXPECT(paleo_result_summary(r, buf, need, NULL) == PALEO_OK);
  EXPECT(strstr(buf, "status = pass") != NULL);
  free(buf);
  paleo_result_free(r);

  /* An unreachable tolerance fails the check but the call succeeds. */
  EXPECT(paleo_scenario_override(s, "analysis.energy-balance.tolerance=1e-14") == PALEO_OK);
  EXPECT(paleo_scenario_run(s, NULL, &r) == PALEO_OK);
  EXPECT(paleo_result_passed(r) == 0);
  paleo_result_free(r);
  paleo_scenario_free(s);
}

static void test_null_handles(void) {
  EXPECT(paleo_scenario_validate(NULL) == PALEO_INVALID_ARGUMENT);
  EXPECT(paleo_result_passed(NULL) == 0);
  EXPECT(paleo_result_check_count(NULL) == 0);
  EXPECT(paleo_set_threads(-1) == PALEO_INVALID_ARGUMENT);
  EXPECT(paleo_set_threads(0) == PALEO_OK);
  paleo_scenario_free(NULL);
  paleo_result_free(NULL);
}

int main(void) {
  test_status_names();
  test_parse_errors();
  test_describe();
  test_run();
  test_null_handles();
  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  else printf("all C API checks passed\n");
  return failures ? 1 : 0;
}
