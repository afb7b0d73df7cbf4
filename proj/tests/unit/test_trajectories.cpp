#include <algorithm>
#include <cmath>
#include <numbers>

#include "core/dynamics.hpp"
#include "core/parallel.hpp"
#include "core/states.hpp"
#include "core/trajectories.hpp"
#include "doctest.h"

using namespace paleo;

namespace {

constexpr double kPi = std::numbers::pi;

EvolutionConfig schrodinger_cfg(double dt, double t_final, int stride, Integrator integ = Integrator::split_step) {
  EvolutionConfig c;
  c.integrator = integ;
  c.dt = dt;
  c.t_final = t_final;
  c.mass = MassMatrix(1);
  c.snapshot_stride = stride;
  return c;
}

Run free_spreading(double t_final, int stride) {
  const Grid g = Grid::line(-15.0, 15.0, 512, Boundary::periodic);
  return evolve(gaussian_state(g, {0.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}, 1.0), PotentialSpec::free_particle(),
                schrodinger_cfg(2e-3, t_final, stride));
}

Run ground_state(double t_final, int stride) {
  const Grid g = Grid::line(-8.0, 8.0, 256, Boundary::periodic);
  return evolve(harmonic_eigenstate(g, {0, 0}, {1.0, 0.0}, MassMatrix(1), 1.0), PotentialSpec::harmonic({1.0, 0.0}),
                schrodinger_cfg(2e-3, t_final, stride));
}

double sample_variance(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

std::vector<double> column(const TrajectorySet& tr, std::size_t t) {
  std::vector<double> x(tr.walker_count);
  for (std::size_t w = 0; w < tr.walker_count; ++w) x[w] = tr.position(w, t)[0];
  return x;
}

}  // namespace

TEST_CASE("bohmian walkers in a plane wave move in straight lines") {
  const Grid g = Grid::line(0.0, 2.0 * kPi, 64, Boundary::periodic);
  Run run = evolve(plane_wave(g, {2.0, 0.0}), PotentialSpec::free_particle(), schrodinger_cfg(1e-3, 1.0, 50));
  FlowSeries fs(run);
  const std::vector<Point> starts{{0.5, 0.0}, {1.0, 0.0}, {3.0, 0.0}};
  TrajectorySet tr = integrate_bohmian(fs, starts);
  CHECK(tr.kind == WalkerKind::bohmian);
  REQUIRE(tr.steps() == run.snapshots.size());
  for (std::size_t w = 0; w < starts.size(); ++w)
    for (std::size_t t = 0; t < tr.steps(); ++t)
      CHECK(tr.position(w, t)[0] == doctest::Approx(starts[w][0] + 2.0 * tr.times[t]).epsilon(1e-6));
}

TEST_CASE("walker at a coherent-state center follows x0 cos t") {
  const Grid g = Grid::line(-10.0, 10.0, 256, Boundary::periodic);
  Run run = evolve(gaussian_state(g, {1.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}, 1.0), PotentialSpec::harmonic({1.0, 0.0}),
                   schrodinger_cfg(2e-3, 2.0 * kPi, 10));
  FlowSeries fs(run);
  const std::vector<Point> starts{{1.0, 0.0}};
  TrajectorySet tr = integrate_bohmian(fs, starts);
  double err = 0.0;
  for (std::size_t t = 0; t < tr.steps(); ++t)
    err = std::max(err, std::abs(tr.position(0, t)[0] - std::cos(tr.times[t])));
  CHECK(err <= 1e-3);
}

TEST_CASE("1D bohmian paths keep their order") {
  Run run = free_spreading(2.0, 10);
  FlowSeries fs(run);
  std::vector<Point> starts = sample_density(run.snapshots[0].density(), run.grid, 64, 5);
  std::sort(starts.begin(), starts.end(), [](const Point& a, const Point& b) { return a[0] < b[0]; });
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  TrajectorySet tr = integrate_bohmian(fs, starts);
  for (std::size_t t = 0; t < tr.steps(); ++t)
    for (std::size_t w = 1; w < tr.walker_count; ++w) CHECK(tr.position(w - 1, t)[0] < tr.position(w, t)[0]);
}

TEST_CASE("starting on a node is a node encounter") {
  const Grid g = Grid::line(-8.0, 8.0, 256, Boundary::periodic);
  Run run = evolve(harmonic_eigenstate(g, {1, 0}, {1.0, 0.0}, MassMatrix(1), 1.0), PotentialSpec::harmonic({1.0, 0.0}),
                   schrodinger_cfg(2e-3, 0.1, 10));
  FlowSeries fs(run);
  const std::vector<Point> starts{{1.0, 0.0}, {0.0, 0.0}};
  try {
    integrate_bohmian(fs, starts);
    FAIL("expected a node encounter");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::node_encounter);
    CHECK(std::string(e.what()).find("walker 1") != std::string::npos);
  }
}

TEST_CASE("drift field oracles") {
  SUBCASE("constant density gives b = v") {
    const Grid g = Grid::line(0.0, 2.0 * kPi, 64, Boundary::periodic);
    FlowField f = polar_decompose(plane_wave(g, {3.0, 0.0}), MassMatrix(1), 1.0);
    VectorField<double> b = drift_field(f);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(b[0][k] == doctest::Approx(f.v[0][k]).epsilon(1e-12));
  }
  SUBCASE("gaussian at rest and with momentum") {
    const double w = 1.3;
    auto err = [&](int n, double p) {
      const Grid g = Grid::line(-8.0, 8.0, n, Boundary::periodic);
      FlowField f = polar_decompose(gaussian_state(g, {0.0, 0.0}, {w, 0.0}, {p, 0.0}, 1.0), MassMatrix(1), 1.0);
      VectorField<double> b = drift_field(f);
      double e = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        const double x = g.point(k)[0];
        if (std::abs(x) <= 4.0) e = std::max(e, std::abs(b[0][k] - (p - x / (w * w))));
      }
      return e;
    };
    for (double p : {0.0, 0.7}) {
      CHECK(err(512, p) <= 1e-2);
      CHECK(err(256, p) / err(512, p) == doctest::Approx(4.0).epsilon(0.05));
    }
  }
}

TEST_CASE("wiener increments have variance hbar dt") {
  const std::vector<double> dB = sample_increments(1000000, 1.0, 1.0, 1e-3, 42);
  CHECK(sample_variance(dB) == doctest::Approx(1e-3).epsilon(0.01));
  const std::vector<double> heavy = sample_increments(1000000, 0.5, 0.25, 2e-3, 7);
  CHECK(sample_variance(heavy) == doctest::Approx(0.5 * 0.25 * 2e-3).epsilon(0.01));
}

TEST_CASE("walkers without drift spread as a wiener process") {
  // ground state has v = 0 everywhere, so the velocity drift is zero
  Run run = ground_state(1.0, 100);
  FlowSeries fs(run);
  NelsonOptions o;
  o.walker_count = 40000;
  o.seed = 3;
  o.drift = NelsonOptions::Drift::velocity;
  o.starts.assign(o.walker_count, Point{0.0, 0.0});
  TrajectorySet tr = integrate_nelson(fs, o);
  for (std::size_t t = 1; t < tr.steps(); ++t)
    CHECK(sample_variance(column(tr, t)) == doctest::Approx(tr.times[t]).epsilon(0.02));
}

TEST_CASE("zero diffusion with b = v reproduces bohmian paths") {
  Run run = free_spreading(1.0, 50);
  FlowSeries fs(run);
  const std::vector<Point> starts{{-1.2, 0.0}, {-0.3, 0.0}, {0.4, 0.0}, {1.5, 0.0}};
  TrajectorySet bohm = integrate_bohmian(fs, starts);
  NelsonOptions o;
  o.walker_count = starts.size();
  o.starts = starts;
  o.diffusion_scale = 0.0;
  o.drift = NelsonOptions::Drift::velocity;
  o.dt_sde = 1e-6;
  TrajectorySet nel = integrate_nelson(fs, o);
  double err = 0.0;
  for (std::size_t w = 0; w < starts.size(); ++w)
    for (std::size_t t = 0; t < bohm.steps(); ++t)
      err = std::max(err, std::abs(bohm.position(w, t)[0] - nel.position(w, t)[0]));
  CHECK(err <= 1e-6);
}

TEST_CASE("nelsonian ensembles do not depend on the worker count") {
  Run run = free_spreading(0.5, 50);
  FlowSeries fs(run);
  NelsonOptions o;
  o.walker_count = 2000;
  o.seed = 11;
  set_default_threads(1);
  TrajectorySet a = integrate_nelson(fs, o);
  set_default_threads(4);
  TrajectorySet b = integrate_nelson(fs, o);
  set_default_threads(0);
  CHECK(a.positions == b.positions);
  CHECK(a.seed == 11);
  o.seed = 12;
  TrajectorySet c = integrate_nelson(fs, o);
  CHECK(a.positions != c.positions);
}

TEST_CASE("dt_sde must divide the snapshot interval") {
  Run run = free_spreading(0.2, 50);
  FlowSeries fs(run);
  NelsonOptions o;
  o.walker_count = 4;
  o.dt_sde = 3e-3;
  try {
    integrate_nelson(fs, o);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
  }
}

TEST_CASE("walkers leaving a dirichlet box are reflected") {
  const Grid g = Grid::line(-2.0, 2.0, 128, Boundary::dirichlet_zero);
  Run run = evolve(gaussian_state(g, {0.0, 0.0}, {0.4, 0.0}, {0.0, 0.0}, 1.0), PotentialSpec::free_particle(),
                   schrodinger_cfg(1e-3, 0.5, 50, Integrator::crank_nicolson));
  FlowSeries fs(run);
  NelsonOptions o;
  o.walker_count = 500;
  o.drift = NelsonOptions::Drift::velocity;
  o.diffusion_scale = 3.0;
  TrajectorySet tr = integrate_nelson(fs, o);
  CHECK(tr.reflections > 0);
  for (double x : tr.positions) {
    CHECK(x >= -2.0);
    CHECK(x <= 2.0);
  }
}

TEST_CASE("both walker kinds stay distributed as |psi|^2") {
  Run run = free_spreading(2.0, 100);
  FlowSeries fs(run);
  const std::size_t N = 10000;
  EquivarianceOptions eo;
  eo.checkpoints = {0, 1, 3, 6, 10};
  REQUIRE(run.snapshots.size() == 11);

  const std::vector<Point> starts = sample_density(run.snapshots[0].density(), run.grid, N, 21);
  TrajectorySet bohm = integrate_bohmian(fs, starts);
  NelsonOptions o;
  o.walker_count = N;
  o.seed = 21;
  TrajectorySet nel = integrate_nelson(fs, o);

  for (const TrajectorySet* tr : {&bohm, &nel}) {
    std::vector<EnsembleStats> st = equivariance_test(*tr, run, eo);
    REQUIRE(st.size() == 5);
    CHECK(st[0].l1_distance_to_rho <= 0.03);
    for (const EnsembleStats& s : st) {
      CHECK(s.l1_distance_to_rho <= 0.05);
      double hsum = 0.0, esum = 0.0;
      for (double h : s.histogram) hsum += h;
      for (double e : s.expected) esum += e;
      CHECK(std::abs(hsum - 1.0) <= 1e-12);
      CHECK(std::abs(esum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("nelsonian walkers keep the ground-state distribution") {
  Run run = ground_state(2.0, 100);
  FlowSeries fs(run);
  NelsonOptions o;
  o.walker_count = 10000;
  o.seed = 5;
  TrajectorySet tr = integrate_nelson(fs, o);
  double mean = 0.0;
  std::vector<EnsembleStats> st = equivariance_test(tr, run);
  for (const EnsembleStats& s : st) {
    CHECK(s.l1_distance_to_rho <= 0.05);
    mean += s.l1_distance_to_rho / static_cast<double>(st.size());
  }
  CHECK(mean <= 0.05);
}

TEST_CASE("fokker-planck residual of the stationary ground state") {
  Run run = ground_state(0.4, 50);
  FlowSeries fs(run);
  auto residual = [&](std::size_t n, std::uint64_t seed) {
    NelsonOptions o;
    o.walker_count = n;
    o.seed = seed;
    return fokker_planck_residual(integrate_nelson(fs, o), fs).residual;
  };
  CHECK(residual(100000, 1) <= 0.1);

  // average over seeds so a single unlucky draw does not decide the ratio
  double r1 = 0.0, r4 = 0.0;
  for (std::uint64_t s = 1; s <= 4; ++s) {
    r1 += residual(10000, s + 100);
    r4 += residual(40000, s + 200);
  }
  CHECK(r1 / r4 == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("frozen walkers have no fokker-planck residual") {
  Run run = ground_state(0.4, 50);
  FlowSeries fs(run);
  NelsonOptions o;
  o.walker_count = 10000;
  o.drift = NelsonOptions::Drift::velocity;
  o.diffusion_scale = 0.0;
  TrajectorySet tr = integrate_nelson(fs, o);
  FokkerPlanckOptions fo;
  fo.zero_drift = true;
  fo.diffusion_scale = 0.0;
  CHECK(fokker_planck_residual(tr, fs, fo).residual <= 1e-5);

  TrajectorySet bohm = integrate_bohmian(fs, std::vector<Point>{{0.0, 0.0}});
  CHECK_THROWS_AS(fokker_planck_residual(bohm, fs), Error);
}

TEST_CASE("mean acceleration obeys the classical force law") {
  SUBCASE("ground state") {
    const Grid g = Grid::line(-8.0, 8.0, 512, Boundary::dirichlet_zero);
    Run run = evolve(harmonic_eigenstate(g, {0, 0}, {1.0, 0.0}, MassMatrix(1), 1.0), PotentialSpec::harmonic({1.0, 0.0}),
                     schrodinger_cfg(1e-3, 0.2, 1, Integrator::crank_nicolson));
    CHECK(mean_acceleration_residual(FlowSeries(run)) <= 1e-2);
  }
  SUBCASE("plane wave") {
    const Grid g = Grid::line(0.0, 2.0 * kPi, 64, Boundary::periodic);
    Run run = evolve(plane_wave(g, {2.0, 0.0}), PotentialSpec::free_particle(), schrodinger_cfg(1e-3, 0.1, 10));
    CHECK(mean_acceleration_residual(FlowSeries(run)) <= 1e-8);
  }
  SUBCASE("coherent state under refinement") {
    auto res = [](int n, double dt) {
      const Grid g = Grid::line(-10.0, 10.0, n, Boundary::dirichlet_zero);
      Run run = evolve(gaussian_state(g, {1.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}, 1.0), PotentialSpec::harmonic({1.0, 0.0}),
                       schrodinger_cfg(dt, 0.5, 1, Integrator::crank_nicolson));
      return mean_acceleration_residual(FlowSeries(run));
    };
    const double coarse = res(256, 2e-3), fine = res(512, 1e-3);
    CHECK(fine <= 1e-2);
    CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.3));
  }
}
