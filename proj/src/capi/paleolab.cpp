#include "paleolab/paleolab.h"

#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>

#include "app/archive.hpp"
#include "app/config.hpp"
#include "app/scenario.hpp"
#include "core/parallel.hpp"

struct paleo_scenario {
  paleo::app::Config config;
  std::optional<paleo::app::Scenario> built;
};

struct paleo_result {
  std::vector<paleo::app::Check> checks;
  bool passed = false;
  std::string summary;
  std::string archive;
};

namespace {

thread_local std::string last_error;

paleo_status status_of(paleo::ErrorCode c) { return static_cast<paleo_status>(static_cast<int>(c)); }

template <class F>
paleo_status guard(F&& fn) {
  try {
    last_error.clear();
    fn();
    return PALEO_OK;
  } catch (const paleo::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return PALEO_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return PALEO_INTERNAL;
  }
}

paleo_status copy_out(const std::string& text, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = text.size() + 1;
  if (!buf) return PALEO_OK;
  if (cap < text.size() + 1) {
    last_error = "buffer too small";
    return PALEO_INVALID_ARGUMENT;
  }
  std::memcpy(buf, text.c_str(), text.size() + 1);
  return PALEO_OK;
}

paleo_status null_arg(const char* what) {
  last_error = std::string(what) + " is NULL";
  return PALEO_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* paleo_version(void) { return PALEOLAB_VERSION_STRING; }

const char* paleo_status_name(paleo_status s) {
  if (s == PALEO_OK) return "ok";
  if (s == PALEO_INTERNAL) return "internal";
  if (s < PALEO_INVALID_ARGUMENT || s > PALEO_HORIZON_TOO_SHORT) return "unknown";
  return paleo::error_code_name(static_cast<paleo::ErrorCode>(static_cast<int>(s)));
}

const char* paleo_last_error(void) { return last_error.c_str(); }

paleo_status paleo_set_threads(int n) {
  if (n < 0) {
    last_error = "thread count must be >= 0";
    return PALEO_INVALID_ARGUMENT;
  }
  paleo::set_default_threads(n);
  last_error.clear();
  return PALEO_OK;
}

paleo_status paleo_scenario_load(const char* path, paleo_scenario** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guard([&] { *out = new paleo_scenario{paleo::app::Config::load(path), std::nullopt}; });
}

paleo_status paleo_scenario_parse(const char* text, const char* origin, paleo_scenario** out) {
  if (!text) return null_arg("text");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guard([&] {
    *out = new paleo_scenario{paleo::app::Config::parse(text, origin ? origin : "<text>"), std::nullopt};
  });
}

paleo_status paleo_scenario_override(paleo_scenario* s, const char* assignment) {
  if (!s) return null_arg("scenario");
  if (!assignment) return null_arg("assignment");
  return guard([&] {
    s->config.apply_override(assignment);
    s->built.reset();
  });
}

paleo_status paleo_scenario_set_seed(paleo_scenario* s, unsigned long long seed) {
  if (!s) return null_arg("scenario");
  return guard([&] {
    s->config.set("seed", std::to_string(seed), "override");
    s->built.reset();
  });
}

paleo_status paleo_scenario_validate(paleo_scenario* s) {
  if (!s) return null_arg("scenario");
  return guard([&] {
    if (!s->built) s->built = paleo::app::build_scenario(s->config);
  });
}

paleo_status paleo_scenario_describe(const paleo_scenario* s, char* buf, size_t cap, size_t* needed) {
  if (!s) return null_arg("scenario");
  last_error.clear();
  return copy_out(s->config.echo(), buf, cap, needed);
}

const char* paleo_scenario_name(const paleo_scenario* s) {
  if (!s) return "";
  return s->built ? s->built->name.c_str() : "";
}

void paleo_scenario_free(paleo_scenario* s) { delete s; }

paleo_status paleo_scenario_run(paleo_scenario* s, const char* out_root, paleo_result** out) {
  if (!s) return null_arg("scenario");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guard([&] {
    if (!s->built) s->built = paleo::app::build_scenario(s->config);
    const paleo::app::Outcome o = paleo::app::execute(*s->built);
    auto* r = new paleo_result{o.checks, o.passed(), paleo::app::summary_text(*s->built, o), ""};
    try {
      if (out_root) r->archive = paleo::app::write_archive(*s->built, o, out_root, paleo::default_threads());
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

int paleo_result_passed(const paleo_result* r) { return r && r->passed ? 1 : 0; }

size_t paleo_result_check_count(const paleo_result* r) { return r ? r->checks.size() : 0; }

paleo_status paleo_result_check(const paleo_result* r, size_t i, const char** name, double* value, double* tolerance,
                                int* passed) {
  if (!r) return null_arg("result");
  if (i >= r->checks.size()) {
    last_error = "check index out of range";
    return PALEO_INVALID_ARGUMENT;
  }
  const paleo::app::Check& c = r->checks[i];
  if (name) *name = c.name.c_str();
  if (value) *value = c.value;
  if (tolerance) *tolerance = c.tolerance;
  if (passed) *passed = c.passed ? 1 : 0;
  last_error.clear();
  return PALEO_OK;
}

paleo_status paleo_result_summary(const paleo_result* r, char* buf, size_t cap, size_t* needed) {
  if (!r) return null_arg("result");
  last_error.clear();
  return copy_out(r->summary, buf, cap, needed);
}

const char* paleo_result_archive(const paleo_result* r) { return r ? r->archive.c_str() : ""; }

void paleo_result_free(paleo_result* r) { delete r; }

}  // extern "C"
