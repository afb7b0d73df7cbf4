#include "app/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <regex>
#include <sstream>

#include "core/error.hpp"

namespace paleo::app {

namespace {

using VT = ValueType;

const std::vector<std::string> kAnalyses{"equivariance", "fokker-planck", "hj-residuals", "caustic",
                                         "equivalence",  "wallstrom",     "measurement",  "product-rule",
                                         "splitting",    "energy-balance", "mean-acceleration"};

std::vector<KeySpec> build_schema() {
  return {
      {"name", VT::string, "", {}, "scenario name, also the archive directory"},
      {"description", VT::string, "-", {}, ""},
      {"analyses", VT::choice_list, "-", kAnalyses, "checks to run after the evolution"},
      {"seed", VT::integer, "1", {}, "walker seed"},

      {"grid.dim", VT::integer, "1", {}, "1 or 2"},
      {"grid.lo", VT::real_list, "-10", {}, "one value per axis"},
      {"grid.hi", VT::real_list, "10", {}, ""},
      {"grid.n", VT::int_list, "256", {}, ""},
      {"grid.boundary", VT::choice, "periodic", {"periodic", "dirichlet"}, ""},

      {"evolution.engine", VT::choice, "schrodinger", {"schrodinger", "pre-schrodinger"}, ""},
      {"evolution.integrator", VT::choice, "split-step", {"split-step", "crank-nicolson"}, ""},
      {"evolution.dt", VT::real, "1e-3", {}, ""},
      {"evolution.t_final", VT::real, "1", {}, ""},
      {"evolution.hbar", VT::real, "1", {}, ""},
      {"evolution.mass", VT::real_list, "1", {}, "mass per axis"},
      {"evolution.snapshot_stride", VT::integer, "10", {}, ""},
      {"evolution.q_scale", VT::real, "1", {}, "multiplier on Q in the pre-Schrodinger engine"},
      {"evolution.eps_node", VT::real, "1e-12", {}, "node threshold relative to max rho"},

      {"potential.kind", VT::choice, "free", {"free", "harmonic", "barrier", "double-well"}, ""},
      {"potential.omega", VT::real_list, "1", {}, "harmonic frequency per axis"},
      {"potential.height", VT::real, "1", {}, "barrier"},
      {"potential.width", VT::real, "1", {}, "barrier"},
      {"potential.a", VT::real, "1", {}, "double well a (x^2 - b^2)^2"},
      {"potential.b", VT::real, "1", {}, ""},

      {"coupling.g", VT::real, "0", {}, "g q0 q1 pointer coupling"},
      {"coupling.t_on", VT::real, "0", {}, ""},
      {"coupling.t_off", VT::real, "0", {}, ""},

      {"state.kind", VT::choice, "gaussian",
       {"gaussian", "plane-wave", "eigenstate", "vortex", "superposition", "product", "bipartite"}, ""},
      {"state.center", VT::real_list, "0", {}, ""},
      {"state.width", VT::real_list, "1", {}, "rho ∝ exp(-(q-c)^2/w^2)"},
      {"state.momentum", VT::real_list, "0", {}, ""},
      {"state.chirp", VT::real_list, "0", {}, "adds c q^2 / 2 to S on each axis"},
      {"state.shear", VT::real, "0", {}, "adds s log cosh q0 to S"},
      {"state.k", VT::real_list, "1", {}, "plane-wave vector"},
      {"state.index", VT::int_list, "0", {}, "oscillator quantum numbers"},
      {"state.omega", VT::real_list, "1", {}, "oscillator frequency per axis"},
      {"state.m", VT::integer, "1", {}, "vortex winding"},
      {"state.envelope", VT::real, "1", {}, "vortex envelope width"},
      {"state.amplitudes", VT::real_list, "1, 0", {}, "bipartite branch amplitudes"},
      {"state.offset", VT::real, "2", {}, "bipartite branch centers at -/+ offset"},
      {"state.branch_width", VT::real, "0.3", {}, ""},
      {"state.pointer_width", VT::real, "1", {}, ""},

      {"trajectories.kind", VT::choice, "none", {"none", "classical", "bohmian", "nelsonian"}, ""},
      {"trajectories.walkers", VT::integer, "10000", {}, ""},
      {"trajectories.dt_sde", VT::real, "0", {}, "0 uses evolution.dt"},
      {"trajectories.substeps", VT::integer, "0", {}, "RK4 steps per snapshot interval, 0 uses the stride"},

      {"analysis.equivariance.tolerance", VT::real, "0.05", {}, "L1 bound"},
      {"analysis.equivariance.checkpoints", VT::integer, "5", {}, ""},
      {"analysis.equivariance.bin_width", VT::real, "0.5", {}, "in ensemble standard deviations"},
      {"analysis.fokker-planck.tolerance", VT::real, "0.1", {}, ""},
      {"analysis.fokker-planck.bandwidth", VT::real, "0", {}, "0 picks the reference rule"},
      {"analysis.fokker-planck.points", VT::integer, "64", {}, ""},
      {"analysis.hj-residuals.tolerance", VT::real, "1e-2", {}, ""},
      {"analysis.hj-residuals.floor", VT::real, "1e-6", {}, "relative density floor"},
      {"analysis.caustic.expected", VT::real, "0", {}, "0 only reports"},
      {"analysis.caustic.tolerance", VT::real, "0.02", {}, "relative"},
      {"analysis.equivalence.starts", VT::real_list, "0.5", {}, "start points, dim values each"},
      {"analysis.equivalence.tolerance", VT::real, "1e-4", {}, "times the domain size"},
      {"analysis.wallstrom.radii", VT::real_list, "-", {}, "circulation radii; unset picks 8h, 16h, 32h"},
      {"analysis.wallstrom.quantized_tolerance", VT::real, "1e-3", {}, ""},
      {"analysis.wallstrom.require_regular", VT::boolean, "false", {}, "fail unless every node is regular"},
      {"analysis.measurement.tolerance", VT::real, "1e-3", {}, "residual_other_branch bound"},
      {"analysis.measurement.separation", VT::real, "6", {}, "pointer widths"},
      {"analysis.measurement.sigmas", VT::real, "3", {}, "binomial band for the branch frequency"},
      {"analysis.product-rule.tolerance", VT::real, "1e-6", {}, ""},
      {"analysis.splitting.tolerance", VT::real, "1e-8", {}, ""},
      {"analysis.energy-balance.energy", VT::real, "0", {}, "0 takes the oscillator energy of the state"},
      {"analysis.energy-balance.tolerance", VT::real, "1e-4", {}, ""},
      {"analysis.energy-balance.exclude_radius", VT::real, "0", {}, "skip points this close to a node"},
      {"analysis.mean-acceleration.tolerance", VT::real, "1e-2", {}, ""},
      {"analysis.mean-acceleration.floor", VT::real, "1e-6", {}, ""},
  };
}

std::vector<KeySpec> build_part_keys() {
  return {
      {"kind", VT::choice, "gaussian", {"gaussian", "plane-wave", "eigenstate", "vortex"}, ""},
      {"weight", VT::real_list, "1, 0", {}, "complex weight re, im"},
      {"center", VT::real_list, "0", {}, ""},
      {"width", VT::real_list, "1", {}, ""},
      {"momentum", VT::real_list, "0", {}, ""},
      {"chirp", VT::real_list, "0", {}, ""},
      {"shear", VT::real, "0", {}, ""},
      {"k", VT::real_list, "1", {}, ""},
      {"index", VT::int_list, "0", {}, ""},
      {"omega", VT::real_list, "1", {}, ""},
      {"m", VT::integer, "1", {}, ""},
      {"envelope", VT::real, "1", {}, ""},
  };
}

const std::regex kPartKey(R"(state\.part([0-9]+)\.([a-z_]+))");

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_real(const std::string& s, double& v) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && p == end;
}

bool parse_int(const std::string& s, long& v) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && p == end;
}

// Type check of one value; returns an empty string when it is acceptable.
std::string check_value(const KeySpec& spec, const std::string& value) {
  auto in_choices = [&](const std::string& w) {
    return std::find(spec.choices.begin(), spec.choices.end(), w) != spec.choices.end();
  };
  auto choice_list = [&] {
    std::string s;
    for (const auto& c : spec.choices) s += (s.empty() ? "" : ", ") + c;
    return s;
  };
  double d;
  long l;
  switch (spec.type) {
    case VT::string: return "";
    case VT::real: return parse_real(value, d) ? "" : "expected a number, got '" + value + "'";
    case VT::integer: return parse_int(value, l) ? "" : "expected an integer, got '" + value + "'";
    case VT::boolean:
      return value == "true" || value == "false" ? "" : "expected true or false, got '" + value + "'";
    case VT::real_list:
      for (const auto& w : split_list(value))
        if (!parse_real(w, d)) return "expected numbers, got '" + w + "'";
      return "";
    case VT::int_list:
      for (const auto& w : split_list(value))
        if (!parse_int(w, l)) return "expected integers, got '" + w + "'";
      return "";
    case VT::choice:
      return in_choices(value) ? "" : "'" + value + "' is not one of: " + choice_list();
    case VT::choice_list:
      for (const auto& w : split_list(value))
        if (!in_choices(w)) return "'" + w + "' is not one of: " + choice_list();
      return "";
  }
  return "";
}

}  // namespace

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> s = build_schema();
  return s;
}

const std::vector<KeySpec>& part_keys() {
  static const std::vector<KeySpec> s = build_part_keys();
  return s;
}

const KeySpec& Config::spec_of(const std::string& key) const {
  for (const KeySpec& k : schema())
    if (k.key == key) return k;
  std::smatch m;
  if (std::regex_match(key, m, kPartKey))
    for (const KeySpec& k : part_keys())
      if (k.key == m[2].str()) return k;
  fail(ErrorCode::config, "unknown key '" + key + "'");
}

void Config::bad(const std::string& key, const std::string& what) const {
  const std::string where = origin(key);
  fail(ErrorCode::config, (where.empty() ? "" : where + ": ") + "key '" + key + "': " + what);
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config, "cannot open config file '" + path + "': file not found or unreadable");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  c.source_ = origin;
  std::stringstream ss(text);
  std::string line, section;
  int no = 0;
  while (std::getline(ss, line)) {
    ++no;
    const std::string where = origin + ":" + std::to_string(no);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) fail(ErrorCode::config, where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::config, where + ": expected key = value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(ErrorCode::config, where + ": missing key before '='");
    if (!section.empty()) key = section + "." + key;
    if (c.entries_.count(key)) fail(ErrorCode::config, where + ": key '" + key + "' set twice");
    c.set(key, trim(line.substr(eq + 1)), where);
  }
  return c;
}

void Config::set(const std::string& key, const std::string& value, const std::string& origin) {
  const KeySpec* spec = nullptr;
  try {
    spec = &spec_of(key);
  } catch (const Error&) {
    fail(ErrorCode::config, origin + ": unknown key '" + key + "'");
  }
  const std::string err = check_value(*spec, value);
  if (!err.empty()) fail(ErrorCode::config, origin + ": key '" + key + "': " + err);
  entries_[key] = Entry{value, origin};
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) fail(ErrorCode::config, "override '" + assignment + "' is not key=value");
  std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  bool known = false;
  for (const KeySpec& k : schema()) known |= k.key == key;
  if (!known && !std::regex_match(key, kPartKey)) {
    std::vector<std::string> hits;
    for (const KeySpec& k : schema()) {
      const auto dot = k.key.rfind('.');
      if (k.key.substr(dot == std::string::npos ? 0 : dot + 1) == key) hits.push_back(k.key);
    }
    if (hits.size() != 1)
      fail(ErrorCode::config, "override key '" + key + "' " + (hits.empty() ? "is unknown" : "is ambiguous"));
    key = hits.front();
  }
  set(key, value, "override");
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string Config::origin(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? std::string() : it->second.origin;
}

std::string Config::raw(const std::string& key) const {
  const KeySpec& spec = spec_of(key);
  const auto it = entries_.find(key);
  if (it != entries_.end()) return it->second.value;
  if (spec.fallback.empty()) bad(key, "required but not set");
  return spec.fallback == "-" ? std::string() : spec.fallback;
}

std::string Config::text(const std::string& key) const { return raw(key); }

double Config::real(const std::string& key) const {
  double v = 0.0;
  if (!parse_real(raw(key), v)) bad(key, "expected a number");
  return v;
}

long Config::integer(const std::string& key) const {
  long v = 0;
  if (!parse_int(raw(key), v)) bad(key, "expected an integer");
  return v;
}

bool Config::boolean(const std::string& key) const { return raw(key) == "true"; }

std::vector<double> Config::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& w : split_list(raw(key))) {
    double v = 0.0;
    parse_real(w, v);
    out.push_back(v);
  }
  return out;
}

std::vector<long> Config::integers(const std::string& key) const {
  std::vector<long> out;
  for (const auto& w : split_list(raw(key))) {
    long v = 0;
    parse_int(w, v);
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::words(const std::string& key) const { return split_list(raw(key)); }

std::vector<int> Config::parts() const {
  std::vector<int> out;
  for (const auto& [key, e] : entries_) {
    std::smatch m;
    if (std::regex_match(key, m, kPartKey)) out.push_back(std::stoi(m[1].str()));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string Config::echo() const {
  std::ostringstream os;
  for (const KeySpec& k : schema()) {
    const auto it = entries_.find(k.key);
    std::string v = it != entries_.end() ? it->second.value : (k.fallback == "-" ? "" : k.fallback);
    os << k.key << " = " << v << "\n";
  }
  for (int p : parts())
    for (const KeySpec& k : part_keys()) {
      const std::string key = "state.part" + std::to_string(p) + "." + k.key;
      const auto it = entries_.find(key);
      os << key << " = " << (it != entries_.end() ? it->second.value : k.fallback) << "\n";
    }
  return os.str();
}

}  // namespace paleo::app
