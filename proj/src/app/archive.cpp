#include "app/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace paleo::app {

static_assert(std::endian::native == std::endian::little, "archive writer assumes a little-endian host");

namespace {

namespace fs = std::filesystem;

constexpr char kSnapMagic[8] = {'P', 'L', 'S', 'N', 'A', 'P', '0', '1'};
constexpr char kTrajMagic[8] = {'P', 'L', 'T', 'R', 'A', 'J', '0', '1'};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) fail(ErrorCode::io, "archive file is truncated");
  return v;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream os(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot write '" + path + "'");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot read '" + path + "'");
  return is;
}

void check_magic(std::istream& is, const char (&magic)[8], const std::string& path) {
  char m[8];
  is.read(m, 8);
  if (!is || std::memcmp(m, magic, 8) != 0) fail(ErrorCode::io, "'" + path + "' has the wrong magic");
}

void snapshots_csv(const std::string& path, const std::vector<WaveField>& snaps) {
  std::ofstream os = open_out(path);
  const Grid& g = snaps.front().grid;
  os << (g.dim() == 1 ? "t,x,re,im\n" : "t,x,y,re,im\n");
  for (const WaveField& w : snaps)
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point q = g.point(k);
      os << num(w.time) << ',' << num(q[0]) << ',';
      if (g.dim() == 2) os << num(q[1]) << ',';
      os << num(w.values[k].real()) << ',' << num(w.values[k].imag()) << '\n';
    }
}

void trajectories_csv(const std::string& path, const TrajectorySet& t) {
  std::ofstream os = open_out(path);
  os << (t.dim == 1 ? "walker,t,x\n" : "walker,t,x,y\n");
  for (std::size_t w = 0; w < t.walker_count; ++w)
    for (std::size_t k = 0; k < t.steps(); ++k) {
      const Point p = t.position(w, k);
      os << w << ',' << num(t.times[k]) << ',' << num(p[0]);
      if (t.dim == 2) os << ',' << num(p[1]);
      os << '\n';
    }
}

void measurement_csv(const std::string& dir, const MeasurementReport& r) {
  std::ofstream os = open_out(dir + "/measurement.csv");
  os << "t,weight0,weight1,residual_other_branch,pointer_separation\n";
  for (std::size_t k = 0; k < r.times.size(); ++k)
    os << num(r.times[k]) << ',' << num(r.branch_weights[k][0]) << ',' << num(r.branch_weights[k][1]) << ','
       << num(r.residual_series[k]) << ',' << num(r.pointer_separation[k]) << '\n';

  std::ofstream cs = open_out(dir + "/conditional.csv");
  cs << "t,q_E,q_S,re,im,re_normalized,im_normalized,velocity\n";
  for (const ConditionalWave& c : r.conditional)
    for (int i = 0; i < c.grid.n(0); ++i)
      cs << num(c.time) << ',' << num(c.environment_position) << ',' << num(c.grid.coord(0, i)) << ','
         << num(c.values[i].real()) << ',' << num(c.values[i].imag()) << ',' << num(c.normalized[i].real()) << ','
         << num(c.normalized[i].imag()) << ',' << num(c.velocity[i]) << '\n';
}

std::vector<std::string> sections_of(const Scenario& s, const Outcome& o) {
  std::vector<std::string> out{"fields"};
  if (o.has_trajectories) out.push_back("trajectories");
  if (s.wants("equivariance")) out.push_back("equivariance");
  if (s.wants("wallstrom")) out.push_back("wallstrom");
  if (o.measurement) out.push_back("measurement");
  for (const char* a : {"hj-residuals", "fokker-planck", "mean-acceleration", "energy-balance", "product-rule",
                        "splitting", "equivalence", "caustic"})
    if (s.wants(a)) {
      out.push_back("residuals");
      break;
    }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

}  // namespace

void write_snapshots(const std::string& path, const std::vector<WaveField>& snaps) {
  require(!snaps.empty(), ErrorCode::invalid_argument, "no snapshots to write");
  const Grid& g = snaps.front().grid;
  std::ofstream os = open_out(path, true);
  os.write(kSnapMagic, 8);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.n(0)));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim() > 1 ? g.n(1) : 1));
  for (int a = 0; a < 2; ++a) {
    put<double>(os, a < g.dim() ? g.lo(a) : 0.0);
    put<double>(os, a < g.dim() ? g.hi(a) : 0.0);
  }
  put<std::uint32_t>(os, g.periodic() ? 0u : 1u);
  put<std::uint64_t>(os, snaps.size());
  for (const WaveField& w : snaps) {
    put<double>(os, w.time);
    os.write(reinterpret_cast<const char*>(w.values.data()), static_cast<std::streamsize>(w.values.size() * 16));
  }
  if (!os) fail(ErrorCode::io, "write to '" + path + "' failed");
}

std::vector<WaveField> read_snapshots(const std::string& path) {
  std::ifstream is = open_in(path);
  check_magic(is, kSnapMagic, path);
  const auto dim = get<std::uint32_t>(is);
  const auto n0 = get<std::uint32_t>(is), n1 = get<std::uint32_t>(is);
  double lh[4];
  for (double& v : lh) v = get<double>(is);
  const Boundary b = get<std::uint32_t>(is) == 0 ? Boundary::periodic : Boundary::dirichlet_zero;
  const auto count = get<std::uint64_t>(is);
  require(dim == 1 || dim == 2, ErrorCode::io, "'" + path + "' has a bad dimension");
  const Grid g = dim == 1 ? Grid::line(lh[0], lh[1], static_cast<int>(n0), b)
                          : Grid::plane({lh[0], lh[1], static_cast<int>(n0)}, {lh[2], lh[3], static_cast<int>(n1)}, b);
  std::vector<WaveField> out;
  out.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    const double t = get<double>(is);
    ComplexField v(g.size());
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 16));
    if (!is) fail(ErrorCode::io, "'" + path + "' is truncated");
    out.emplace_back(g, std::move(v), t);
  }
  return out;
}

void write_trajectories(const std::string& path, const TrajectorySet& t) {
  std::ofstream os = open_out(path, true);
  os.write(kTrajMagic, 8);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.kind));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.dim));
  put<std::uint64_t>(os, t.walker_count);
  put<std::uint64_t>(os, t.steps());
  put<std::uint64_t>(os, t.seed);
  os.write(reinterpret_cast<const char*>(t.times.data()), static_cast<std::streamsize>(t.times.size() * 8));
  os.write(reinterpret_cast<const char*>(t.positions.data()), static_cast<std::streamsize>(t.positions.size() * 8));
  if (!os) fail(ErrorCode::io, "write to '" + path + "' failed");
}

TrajectorySet read_trajectories(const std::string& path) {
  std::ifstream is = open_in(path);
  check_magic(is, kTrajMagic, path);
  const auto kind = get<std::uint32_t>(is);
  const auto dim = get<std::uint32_t>(is);
  const auto walkers = get<std::uint64_t>(is);
  const auto steps = get<std::uint64_t>(is);
  const auto seed = get<std::uint64_t>(is);
  require(kind <= 2 && (dim == 1 || dim == 2), ErrorCode::io, "'" + path + "' has a bad header");
  std::vector<double> times(steps);
  is.read(reinterpret_cast<char*>(times.data()), static_cast<std::streamsize>(steps * 8));
  TrajectorySet t(static_cast<WalkerKind>(kind), static_cast<int>(dim), std::move(times), walkers);
  t.seed = seed;
  is.read(reinterpret_cast<char*>(t.positions.data()), static_cast<std::streamsize>(t.positions.size() * 8));
  if (!is) fail(ErrorCode::io, "'" + path + "' is truncated");
  return t;
}

std::string summary_text(const Scenario& s, const Outcome& o) {
  std::ostringstream os;
  os << "scenario = " << s.name << "\n";
  os << "status = " << (o.passed() ? "pass" : "fail") << "\n";
  os << "checks = " << o.checks.size() << "\n";
  if (!o.error.empty()) os << "error = " << o.error << "\n";
  for (const Check& c : o.checks) {
    const std::string k = "check." + c.name;
    os << k << ".value = " << num(c.value) << "\n";
    os << k << ".tolerance = " << num(c.tolerance) << "\n";
    os << k << ".relation = " << c.relation << "\n";
    os << k << ".pass = " << (c.passed ? "true" : "false") << "\n";
    if (!c.note.empty()) os << k << ".note = " << c.note << "\n";
  }
  return os.str();
}

std::string write_archive(const Scenario& s, const Outcome& o, const std::string& root, int threads) {
  const std::string dir = (fs::path(root) / s.name).string();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create '" + dir + "': " + ec.message());

  std::vector<std::string> files;
  if (!o.run.snapshots.empty()) {
    write_snapshots(dir + "/snapshots.bin", o.run.snapshots);
    files.push_back("snapshots.bin");
    if (o.run.snapshots.size() * o.run.grid.size() <= kCsvLimit) {
      snapshots_csv(dir + "/snapshots.csv", o.run.snapshots);
      files.push_back("snapshots.csv");
    }
  }
  if (o.has_trajectories) {
    write_trajectories(dir + "/trajectories.bin", o.trajectories);
    files.push_back("trajectories.bin");
    if (o.trajectories.positions.size() <= kCsvLimit) {
      trajectories_csv(dir + "/trajectories.csv", o.trajectories);
      files.push_back("trajectories.csv");
    }
  }
  if (o.measurement) {
    measurement_csv(dir, *o.measurement);
    files.push_back("measurement.csv");
    files.push_back("conditional.csv");
  }
  {
    std::ofstream os = open_out(dir + "/analyses.txt");
    for (const auto& [k, v] : o.values) os << k << " = " << v << "\n";
    files.push_back("analyses.txt");
  }
  open_out(dir + "/summary.txt") << summary_text(s, o);
  files.push_back("summary.txt");

  std::ofstream os = open_out(dir + "/manifest.txt");
  // Metadata sits in comments so the manifest itself loads as a scenario.
  os << "# format = paleolab-archive 1\n";
  os << "# version = " << PALEOLAB_VERSION_STRING << "\n";
  os << "# scenario = " << s.name << "\n";
  os << "# source = " << s.config.source() << "\n";
  os << "# seed = " << s.seed << "\n";
  os << "# threads = " << threads << "\n";
  os << "# sections = " << join(sections_of(s, o)) << "\n";
  os << "# files = " << join(files) << "\n";
  os << s.config.echo();
  return dir;
}

}  // namespace paleo::app
