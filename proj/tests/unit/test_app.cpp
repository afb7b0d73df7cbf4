#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "app/archive.hpp"
#include "app/config.hpp"
#include "app/scenario.hpp"
#include "core/states.hpp"
#include "doctest.h"

using namespace paleo;
using namespace paleo::app;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  FAIL("expected an error");
  return "";
}

const char* kGround = R"(
name = ground   # trailing comment
analyses = energy-balance

[grid]
lo = -6
hi = 6
n = 512
boundary = dirichlet

[evolution]
integrator = crank-nicolson
t_final = 0

[potential]
kind = harmonic

[state]
kind = eigenstate
)";

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("paleolab_test_app_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config sections, comments and defaults") {
  const Config c = Config::parse(kGround, "g.cfg");
  CHECK(c.text("name") == "ground");
  CHECK(c.integer("grid.n") == 512);
  CHECK(c.reals("grid.lo") == std::vector<double>{-6.0});
  CHECK(c.real("evolution.dt") == 1e-3);
  CHECK(c.real("analysis.equivariance.tolerance") == 0.05);
  CHECK(c.words("analyses") == std::vector<std::string>{"energy-balance"});
  CHECK(c.has("grid.n"));
  CHECK_FALSE(c.has("evolution.dt"));
  CHECK(c.origin("grid.n") == "g.cfg:8");
  CHECK(c.echo().find("evolution.dt = 1e-3\n") != std::string::npos);
}

TEST_CASE("config errors name the key and the line") {
  CHECK(code_of([] { Config::parse("name = a\n[grid]\nsize = 3\n", "x.cfg"); }) == ErrorCode::config);
  CHECK(message_of([] { Config::parse("name = a\n[grid]\nsize = 3\n", "x.cfg"); }).find("x.cfg:3") !=
        std::string::npos);
  CHECK(message_of([] { Config::parse("[grid]\nn = 12x\n", "y.cfg"); }).find("y.cfg:2: key 'grid.n'") !=
        std::string::npos);
  CHECK(message_of([] { Config::parse("[grid]\nboundary = open\n", "z"); }).find("periodic") != std::string::npos);
  CHECK(code_of([] { Config::parse("name = a\nname = b\n", "d"); }) == ErrorCode::config);
  CHECK(code_of([] { Config::parse("just words\n", "w"); }) == ErrorCode::config);
  CHECK(code_of([] { Config::parse("[grid\n", "s"); }) == ErrorCode::config);
  CHECK(code_of([] { Config::load("/nonexistent/file.cfg"); }) == ErrorCode::config);
  const Config c = Config::parse("[grid]\nn = 64\n", "r");
  CHECK(message_of([&] { c.text("name"); }).find("required") != std::string::npos);
}

TEST_CASE("overrides resolve unique suffixes") {
  Config c = Config::parse(kGround, "g.cfg");
  c.apply_override("dt=5e-4");
  CHECK(c.real("evolution.dt") == 5e-4);
  CHECK(c.origin("evolution.dt") == "override");
  c.apply_override("grid.n = 128");
  CHECK(c.integer("grid.n") == 128);
  CHECK(code_of([&] { c.apply_override("tolerance=1"); }) == ErrorCode::config);
  CHECK(code_of([&] { c.apply_override("nothing=1"); }) == ErrorCode::config);
  CHECK(code_of([&] { c.apply_override("dt"); }) == ErrorCode::config);
  CHECK(code_of([&] { c.apply_override("dt=fast"); }) == ErrorCode::config);
}

TEST_CASE("part keys") {
  const Config c = Config::parse(
      "name = s\n[state]\nkind = superposition\n[state.part2]\nkind = gaussian\ncenter = 1\n"
      "[state.part0]\nweight = 0, 1\n",
      "p");
  CHECK(c.parts() == std::vector<int>{0, 2});
  CHECK(c.reals("state.part0.weight") == std::vector<double>{0.0, 1.0});
  CHECK(c.text("state.part0.kind") == "gaussian");
  CHECK(code_of([] { Config::parse("[state.part0]\ncolour = red\n", "p"); }) == ErrorCode::config);
}

TEST_CASE("cross-field validation") {
  auto build = [](const std::string& text) { return build_scenario(Config::parse(text, "v")); };
  CHECK(message_of([&] { build("name = a\nanalyses = wallstrom\n"); }).find("wallstrom requires dim=2") !=
        std::string::npos);
  CHECK(message_of([&] { build("name = a\n[grid]\nboundary = dirichlet\n"); }).find("split-step requires") !=
        std::string::npos);
  CHECK(code_of([&] { build("name = a\nanalyses = equivalence\n"); }) == ErrorCode::config);
  CHECK(code_of([&] { build("name = a\nanalyses = equivariance\n"); }) == ErrorCode::config);
  CHECK(code_of([&] { build("name = a\nanalyses = measurement\n"); }) == ErrorCode::config);
  CHECK(code_of([&] { build("name = a\n[grid]\nn = 8\n"); }) == ErrorCode::config);
  CHECK(code_of([&] { build("name = a b\n"); }) == ErrorCode::config);
  CHECK(code_of([&] { build("name = a\n[grid]\nlo = 1, 2\n"); }) == ErrorCode::config);
  CHECK(code_of([&] { build("name = a\n[evolution]\ndt = 1\n[potential]\nkind = harmonic\n[grid]\nlo=-100\nhi=100\n"); }) ==
        ErrorCode::config);
  CHECK(code_of([&] { build("name = a\n[analysis.hj-residuals]\ntolerance = 0\n"); }) == ErrorCode::config);

  const Scenario s = build(kGround);
  CHECK(s.grid.n(0) == 512);
  CHECK(s.evolution.integrator == Integrator::crank_nicolson);
  CHECK(s.psi0.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("states built from the config match the library builders") {
  const Scenario s = build_scenario(Config::parse(
      "name = g\n[grid]\nlo = -10\nhi = 10\nn = 128\n[state]\nwidth = 1.5\ncenter = 0.5\nmomentum = 2\n", "s"));
  const WaveField ref = gaussian_state(s.grid, {0.5, 0.0}, {1.5, 0.0}, {2.0, 0.0}, 1.0);
  double worst = 0.0;
  for (std::size_t k = 0; k < ref.values.size(); ++k) worst = std::max(worst, std::abs(ref.values[k] - s.psi0.values[k]));
  CHECK(worst <= 1e-14);

  // chirp and shear: the phase difference between neighbours follows S'
  const Scenario c = build_scenario(Config::parse(
      "name = c\n[grid]\nlo = -10\nhi = 10\nn = 1024\n[evolution]\nt_final = 0\n[state]\nwidth = 2\nchirp = -1\nshear = 0.5\n", "s"));
  const double h = c.grid.h(0);
  for (double x : {-1.0, 0.3, 2.0}) {
    const int i = static_cast<int>(std::lround((x - c.grid.lo(0)) / h));
    const double q = c.grid.coord(0, i) + 0.5 * h;
    const double dS = std::arg(c.psi0.values[i + 1] / c.psi0.values[i]) / h;
    CHECK(dS == doctest::Approx(-q + 0.5 * std::tanh(q)).epsilon(1e-5));
  }
}

TEST_CASE("snapshot and trajectory files round trip") {
  const auto dir = scratch("roundtrip");
  const Grid g = Grid::plane({-3.0, 3.0, 32}, {-2.0, 4.0, 16}, Boundary::periodic);
  std::vector<WaveField> snaps{gaussian_state(g, {0.1, 0.2}, {1.0, 1.0}, {1.0, -1.0}, 1.0)};
  snaps.push_back(snaps[0]);
  snaps[1].time = 0.25;
  const std::string sp = (dir / "s.bin").string();
  write_snapshots(sp, snaps);
  CHECK(std::filesystem::file_size(sp) == 8 + 12 + 32 + 4 + 8 + 2 * (8 + 16 * g.size()));
  const std::vector<WaveField> back = read_snapshots(sp);
  REQUIRE(back.size() == 2);
  CHECK(back[1].time == 0.25);
  CHECK(back[0].grid.same_shape(g));
  CHECK(back[0].grid.lo(1) == -2.0);
  CHECK(back[1].values == snaps[1].values);

  TrajectorySet t(WalkerKind::nelsonian, 2, {0.0, 0.5, 1.0}, 4);
  t.seed = 99;
  for (std::size_t w = 0; w < 4; ++w)
    for (std::size_t k = 0; k < 3; ++k) t.set(w, k, {double(w), 0.1 * double(k)});
  const std::string tp = (dir / "t.bin").string();
  write_trajectories(tp, t);
  const TrajectorySet tb = read_trajectories(tp);
  CHECK(tb.kind == WalkerKind::nelsonian);
  CHECK(tb.seed == 99);
  CHECK(tb.times == t.times);
  CHECK(tb.positions == t.positions);

  std::ofstream(dir / "bad.bin") << "NOTMAGIC";
  CHECK(code_of([&] { read_snapshots((dir / "bad.bin").string()); }) == ErrorCode::io);
  std::filesystem::remove_all(dir);
}

TEST_CASE("the archive manifest reloads as the same scenario") {
  const auto dir = scratch("archive");
  Config c = Config::parse(kGround, "g.cfg");
  c.apply_override("seed=42");
  const Scenario s = build_scenario(c);
  const Outcome o = execute(s);
  CHECK(o.passed());
  REQUIRE(o.checks.size() == 1);
  const std::string out = write_archive(s, o, dir.string(), 1);
  for (const char* f : {"manifest.txt", "snapshots.bin", "analyses.txt", "summary.txt"})
    CHECK(std::filesystem::exists(std::filesystem::path(out) / f));
  const Config again = Config::load(out + "/manifest.txt");
  CHECK(again.echo() == c.echo());
  CHECK(again.integer("seed") == 42);

  std::ifstream in(out + "/summary.txt");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("status = pass\n") != std::string::npos);
  CHECK(text.find("check.energy-balance.residual.pass = true\n") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("contract failures inside an analysis become failed checks") {
  // a caustic before any comparison window
  const Scenario s = build_scenario(Config::parse(
      "name = early\nanalyses = equivalence\n[grid]\nlo = -5\nhi = 5\nn = 512\n"
      "[evolution]\nengine = pre-schrodinger\nt_final = 0.2\nsnapshot_stride = 50\n"
      "[state]\nwidth = 0.5\nchirp = -20\n[analysis.equivalence]\nstarts = 0.1\n",
      "e"));
  const Outcome o = execute(s);
  CHECK_FALSE(o.passed());
  REQUIRE(o.checks.size() == 1);
  CHECK(o.checks[0].name == "equivalence.error");
  CHECK(o.checks[0].note.find("horizon") != std::string::npos);
}
