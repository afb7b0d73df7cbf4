#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "paleolab/paleolab.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitConfig = 1;
constexpr int kExitFail = 2;

struct Options {
  std::string out;
  std::vector<std::string> overrides;
  int threads = 0;
  long long seed = -1;
};

int exit_for(paleo_status s) { return s == PALEO_CONFIG || s == PALEO_IO ? kExitConfig : kExitFail; }

void report_error(paleo_status s) {
  std::cerr << "error [" << paleo_status_name(s) << "]: " << paleo_last_error() << "\n";
}

std::string describe(const paleo_scenario* s) {
  size_t need = 0;
  paleo_scenario_describe(s, nullptr, 0, &need);
  std::string buf(need, '\0');
  paleo_scenario_describe(s, buf.data(), buf.size(), &need);
  buf.pop_back();
  return buf;
}

// Loads, applies overrides and the seed, validates. Returns PALEO_OK or the failure.
paleo_status prepare(const std::string& path, const Options& o, paleo_scenario** out) {
  paleo_status st = paleo_scenario_load(path.c_str(), out);
  if (st != PALEO_OK) return st;
  for (const std::string& ov : o.overrides)
    if ((st = paleo_scenario_override(*out, ov.c_str())) != PALEO_OK) return st;
  if (o.seed >= 0 && (st = paleo_scenario_set_seed(*out, static_cast<unsigned long long>(o.seed))) != PALEO_OK)
    return st;
  return paleo_scenario_validate(*out);
}

void print_checks(const paleo_result* r, std::ostream& os) {
  for (size_t i = 0; i < paleo_result_check_count(r); ++i) {
    const char* name = nullptr;
    double value = 0.0, tol = 0.0;
    int passed = 0;
    paleo_result_check(r, i, &name, &value, &tol, &passed);
    char line[256];
    std::snprintf(line, sizeof line, "%-4s %-48s value=%-12.4g tolerance=%.4g", passed ? "PASS" : "FAIL", name,
                  value, tol);
    os << line << "\n";
  }
}

int cmd_validate(const std::string& path, const Options& o) {
  paleo_scenario* s = nullptr;
  const paleo_status st = prepare(path, o, &s);
  if (st != PALEO_OK) {
    report_error(st);
    paleo_scenario_free(s);
    return exit_for(st);
  }
  std::cout << describe(s);
  std::cout << "valid: " << paleo_scenario_name(s) << "\n";
  paleo_scenario_free(s);
  return kExitPass;
}

int cmd_run(const std::string& path, const Options& o) {
  paleo_scenario* s = nullptr;
  paleo_status st = prepare(path, o, &s);
  if (st != PALEO_OK) {
    report_error(st);
    paleo_scenario_free(s);
    return exit_for(st);
  }
  paleo_result* r = nullptr;
  st = paleo_scenario_run(s, o.out.c_str(), &r);
  paleo_scenario_free(s);
  if (st != PALEO_OK) {
    report_error(st);
    return exit_for(st);
  }
  print_checks(r, std::cout);
  const bool ok = paleo_result_passed(r) != 0;
  std::cout << "status: " << (ok ? "pass" : "fail") << "\n";
  std::cout << "archive: " << paleo_result_archive(r) << "\n";
  paleo_result_free(r);
  return ok ? kExitPass : kExitFail;
}

struct Row {
  std::string file;
  std::string name;
  std::string status;  // pass, fail, error
  std::size_t checks = 0;
  std::vector<std::string> failed;
  std::string error;
};

Row run_member(const std::string& file, const Options& o) {
  Row row{file, fs::path(file).stem().string(), "error", 0, {}, ""};
  paleo_scenario* s = nullptr;
  paleo_status st = prepare(file, o, &s);
  if (st == PALEO_OK) {
    row.name = paleo_scenario_name(s);
    paleo_result* r = nullptr;
    st = paleo_scenario_run(s, o.out.c_str(), &r);
    if (st == PALEO_OK) {
      row.checks = paleo_result_check_count(r);
      for (size_t i = 0; i < row.checks; ++i) {
        const char* name = nullptr;
        int passed = 0;
        paleo_result_check(r, i, &name, nullptr, nullptr, &passed);
        if (!passed) row.failed.emplace_back(name);
      }
      row.status = paleo_result_passed(r) ? "pass" : "fail";
      paleo_result_free(r);
    }
  }
  if (st != PALEO_OK) row.error = std::string(paleo_status_name(st)) + ": " + paleo_last_error();
  paleo_scenario_free(s);
  return row;
}

int cmd_suite(const std::string& manifest, const Options& o) {
  std::ifstream in(manifest);
  if (!in) {
    std::cerr << "error [config]: cannot open manifest '" << manifest << "'\n";
    return kExitConfig;
  }
  const fs::path base = fs::path(manifest).parent_path();
  std::vector<std::string> files;
  for (std::string line; std::getline(in, line);) {
    line = line.substr(0, line.find('#'));
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty()) continue;
    const fs::path p(line);
    files.push_back((p.is_absolute() ? p : base / p).string());
  }
  if (files.empty()) {
    std::cerr << "error [config]: no scenarios in '" << manifest << "'\n";
    return kExitConfig;
  }

  // Scenarios run in parallel; each one is sequential in time.
  std::vector<Row> rows(files.size());
  const unsigned workers =
      std::min<unsigned>(static_cast<unsigned>(files.size()),
                         o.threads > 0 ? static_cast<unsigned>(o.threads) : std::max(1u, std::thread::hardware_concurrency()));
  paleo_set_threads(workers > 1 ? 1 : o.threads);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < files.size();) rows[i] = run_member(files[i], o);
    });
  for (std::thread& t : pool) t.join();

  bool all = true;
  std::ofstream table;
  std::error_code ec;
  fs::create_directories(o.out, ec);
  table.open((fs::path(o.out) / "suite.txt").string());
  char line[512];
  std::snprintf(line, sizeof line, "%-28s %-6s %6s  %s", "scenario", "status", "checks", "failed");
  std::cout << line << "\n";
  for (const Row& r : rows) {
    all &= r.status == "pass";
    std::string detail;
    for (const std::string& f : r.failed) detail += (detail.empty() ? "" : ", ") + f;
    if (!r.error.empty()) detail = r.error;
    std::snprintf(line, sizeof line, "%-28s %-6s %6zu  %s", r.name.c_str(), r.status.c_str(), r.checks,
                  detail.empty() ? "-" : detail.c_str());
    std::cout << line << "\n";
    if (table) {
      table << "scenario." << r.name << ".file = " << r.file << "\n";
      table << "scenario." << r.name << ".status = " << r.status << "\n";
      table << "scenario." << r.name << ".checks = " << r.checks << "\n";
      if (!detail.empty()) table << "scenario." << r.name << ".failed = " << detail << "\n";
    }
  }
  if (table) table << "status = " << (all ? "pass" : "fail") << "\n";
  std::cout << "suite: " << (all ? "pass" : "fail") << "\n";
  return all ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario runner for the paleolab numerical laboratory"};
  app.set_version_flag("--version", std::string(paleo_version()));
  app.require_subcommand(1);

  Options o;
  const char* env = std::getenv("PALEOLAB_OUT");
  o.out = env && *env ? env : "runs";
  std::string path;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--override", o.overrides, "key=value, repeatable");
    sub->add_option("--seed", o.seed, "replace the scenario seed")->check(CLI::NonNegativeNumber);
  };
  auto workers = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "archive root (default $PALEOLAB_OUT or ./runs)");
    sub->add_option("--threads", o.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  };

  CLI::App* run = app.add_subcommand("run", "run one scenario and write its archive");
  run->add_option("config", path, "scenario file")->required();
  common(run);
  workers(run);

  CLI::App* validate = app.add_subcommand("validate", "check a scenario and print its effective config");
  validate->add_option("config", path, "scenario file")->required();
  common(validate);

  CLI::App* suite = app.add_subcommand("suite", "run every scenario listed in a manifest");
  suite->add_option("manifest", path, "one scenario file per line, relative to the manifest")->required();
  common(suite);
  workers(suite);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (run->parsed()) paleo_set_threads(o.threads);
  if (run->parsed()) return cmd_run(path, o);
  if (validate->parsed()) return cmd_validate(path, o);
  return cmd_suite(path, o);
}
