#include <cmath>

#include "core/evolution.hpp"
#include "core/operators.hpp"
#include "core/states.hpp"
#include "doctest.h"

using namespace paleo;

namespace {

EvolutionConfig split_cfg(double dt, double t_final, Engine e = Engine::schrodinger) {
  EvolutionConfig c;
  c.engine = e;
  c.integrator = Integrator::split_step;
  c.dt = dt;
  c.t_final = t_final;
  c.mass = MassMatrix(1);
  return c;
}

double second_moment(const WaveField& w, double center = 0.0) {
  RealField f = w.density();
  for (std::size_t k = 0; k < f.size(); ++k) f[k] *= std::pow(w.grid.point(k)[0] - center, 2);
  return integrate(f, w.grid);
}

double rel_diff(const ComplexField& a, const ComplexField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += std::norm(a[k] - b[k]);
    den += std::norm(a[k]);
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("harmonic ground state is stationary over one period") {
  const Grid g = Grid::line(-10.0, 10.0, 256, Boundary::periodic);
  const MassMatrix m(1);
  const WaveField psi0 = harmonic_eigenstate(g, {0, 0}, {1, 0}, m, 1.0);
  const Run run = evolve(psi0, PotentialSpec::harmonic({1, 0}), split_cfg(1e-3, 2 * M_PI));
  const RealField r0 = psi0.density();
  double dev = 0.0;
  for (const auto& s : run.snapshots) {
    const RealField r = s.density();
    for (std::size_t k = 0; k < r.size(); ++k) dev = std::max(dev, std::abs(r[k] - r0[k]));
  }
  CHECK(dev <= 1e-6);
  CHECK(run.max_norm_drift <= 1e-10);
}

TEST_CASE("free gaussian spreads at the analytic rate") {
  // rho ∝ exp(-x^2/s^2): <x^2>(t) = s^2/2 (1 + (hbar t / (M s^2))^2), M = 1/m.
  const double s = 1.0, hbar = 1.0, minv = 0.5;
  const Grid g = Grid::line(-40.0, 40.0, 2048, Boundary::periodic);
  EvolutionConfig cfg = split_cfg(1e-3, 3.0);
  cfg.mass = MassMatrix(1, minv);
  cfg.snapshot_stride = 1000;
  const Run run = evolve(gaussian_state(g, {0, 0}, {s, 0}, {0, 0}, hbar), PotentialSpec::free_particle(), cfg);
  for (const auto& w : run.snapshots) {
    const double t = w.time;
    const double expect = 0.5 * s * s * (1 + std::pow(hbar * t * minv / (s * s), 2));
    CHECK(std::abs(second_moment(w) / expect - 1.0) <= 1e-4);
  }
}

TEST_CASE("plane wave picks up the free phase") {
  const Grid g = Grid::line(0.0, 2 * M_PI, 64, Boundary::periodic);
  const double k = 3.0, t = 0.5;
  const WaveField psi0 = plane_wave(g, {k, 0});
  const Run run = evolve(psi0, PotentialSpec::free_particle(), split_cfg(1e-3, t));
  const WaveField& last = run.snapshots.back();
  const Complex ph = std::polar(1.0, -0.5 * k * k * last.time);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(std::abs(std::norm(last.values[i]) - std::norm(psi0.values[i])) <= 1e-10);
    CHECK(std::abs(last.values[i] - ph * psi0.values[i]) <= 1e-9);
  }
}

TEST_CASE("crank-nicolson conserves norm and energy") {
  const Grid g = Grid::line(-8.0, 8.0, 400, Boundary::dirichlet_zero);
  EvolutionConfig cfg;
  cfg.integrator = Integrator::crank_nicolson;
  cfg.dt = 2e-3;
  cfg.t_final = 1.0;
  cfg.mass = MassMatrix(1);
  const PotentialSpec V = PotentialSpec::double_well(0.2, 2.0);
  const Propagator prop(g, V, cfg);
  WaveField w = gaussian_state(g, {-1.5, 0}, {0.7, 0}, {1.0, 0}, 1.0);
  const double e0 = prop.energy(w);
  for (int s = 0; s < 500; ++s) {
    const double n0 = w.norm();
    w = prop.step(w);
    CHECK(std::abs(w.norm() - n0) <= 1e-12);
  }
  CHECK(std::abs(prop.energy(w) / e0 - 1.0) <= 1e-6);
}

TEST_CASE("2D crank-nicolson conserves norm and energy") {
  const Grid g = Grid::plane({-6, 6, 96}, {-6, 6, 80}, Boundary::dirichlet_zero);
  EvolutionConfig cfg;
  cfg.integrator = Integrator::crank_nicolson;
  cfg.dt = 2e-3;
  cfg.mass = MassMatrix{1.0, 0.5};
  const Propagator prop(g, PotentialSpec::harmonic({1.0, 1.3}), cfg);
  WaveField w = gaussian_state(g, {0.5, -0.4}, {0.8, 1.1}, {0.3, 0.6}, 1.0);
  const double e0 = prop.energy(w);
  for (int s = 0; s < 200; ++s) w = prop.step(w);
  CHECK(std::abs(w.norm() - 1.0) <= 1e-10);
  CHECK(std::abs(prop.energy(w) / e0 - 1.0) <= 1e-6);
}

TEST_CASE("split-step energy is conserved") {
  const Grid g = Grid::plane({-8, 8, 64}, {-8, 8, 64}, Boundary::periodic);
  EvolutionConfig cfg = split_cfg(1e-3, 1.0);
  cfg.mass = MassMatrix{1.0, 1.0};
  const Propagator prop(g, PotentialSpec::harmonic({1.0, 1.0}), cfg);
  WaveField w = gaussian_state(g, {1.0, 0}, {1.0, 0.8}, {0, 0.5}, 1.0);
  const double e0 = prop.energy(w);
  for (int s = 0; s < 1000; ++s) w = prop.step(w);
  CHECK(std::abs(prop.energy(w) / e0 - 1.0) <= 1e-6);
}

TEST_CASE("one step is homogeneous of degree one in psi") {
  const Complex c(-0.7, 2.3);
  auto check = [&](const Grid& g, EvolutionConfig cfg) {
    cfg.mass = MassMatrix(g.dim());
    WaveField psi = gaussian_state(g, {0.3, 0}, {1.0, 0}, {0.8, 0}, 1.0);
    WaveField scaled = psi;
    for (auto& z : scaled.values) z *= c;
    const Propagator prop(g, PotentialSpec::harmonic({1, 0}), cfg);
    const WaveField a = prop.step(psi), b = prop.step(scaled);
    ComplexField ca = a.values;
    for (auto& z : ca) z *= c;
    CHECK(rel_diff(ca, b.values) <= 1e-10);
  };
  for (Engine e : {Engine::schrodinger, Engine::pre_schrodinger}) {
    check(Grid::line(-10, 10, 256, Boundary::periodic), split_cfg(1e-3, 1.0, e));
    EvolutionConfig cn = split_cfg(1e-3, 1.0, e);
    cn.integrator = Integrator::crank_nicolson;
    check(Grid::line(-10, 10, 256, Boundary::dirichlet_zero), cn);
  }
}

TEST_CASE("pre-Schrödinger with Q switched off is the Schrödinger step") {
  for (Integrator integ : {Integrator::split_step, Integrator::crank_nicolson}) {
    const Grid g = Grid::line(-10, 10, 256, integ == Integrator::split_step ? Boundary::periodic : Boundary::dirichlet_zero);
    EvolutionConfig lin = split_cfg(1e-3, 1.0);
    lin.integrator = integ;
    EvolutionConfig pre = lin;
    pre.engine = Engine::pre_schrodinger;
    pre.q_scale = 0.0;
    const PotentialSpec V = PotentialSpec::harmonic({1, 0});
    WaveField a = gaussian_state(g, {0.5, 0}, {1.2, 0}, {0.4, 0}, 1.0), b = a;
    const Propagator pa(g, V, lin), pb(g, V, pre);
    for (int s = 0; s < 100; ++s) {
      a = pa.step(a);
      b = pb.step(b);
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) worst = std::max(worst, std::abs(a.values[k] - b.values[k]));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("pre-Schrödinger transports a gaussian rigidly") {
  // S = kx, V = 0: every characteristic moves at speed k, so rho(x,t) = rho0(x - kt).
  const double k = 1.0, t = 2.0;
  const Grid g = Grid::line(-20.0, 20.0, 1024, Boundary::periodic);
  const WaveField psi0 = gaussian_state(g, {0, 0}, {1, 0}, {k, 0}, 1.0);
  const Run run = evolve(psi0, PotentialSpec::free_particle(), split_cfg(1e-3, t, Engine::pre_schrodinger));
  REQUIRE_FALSE(run.stopped_early);
  const WaveField& last = run.snapshots.back();
  const WaveField shifted = gaussian_state(g, {k * last.time, 0}, {1, 0}, {k, 0}, 1.0);
  const RealField r = last.density(), r_ex = shifted.density();
  double dev = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) dev = std::max(dev, std::abs(r[i] - r_ex[i]));
  CHECK(dev <= 1e-5);
}

TEST_CASE("Crank-Nicolson pre-Schrödinger transport converges at second order") {
  const double k = 1.0, t = 1.0;
  auto dev_at = [&](int n) {
    const Grid g = Grid::line(-10.0, 10.0, n, Boundary::dirichlet_zero);
    EvolutionConfig cfg = split_cfg(1e-3, t, Engine::pre_schrodinger);
    cfg.integrator = Integrator::crank_nicolson;
    const Run run = evolve(gaussian_state(g, {0, 0}, {1, 0}, {k, 0}, 1.0), PotentialSpec::free_particle(), cfg);
    REQUIRE_FALSE(run.stopped_early);
    const RealField r = run.snapshots.back().density();
    const RealField r_ex = gaussian_state(g, {k * t, 0}, {1, 0}, {k, 0}, 1.0).density();
    double dev = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) dev = std::max(dev, std::abs(r[i] - r_ex[i]));
    return dev;
  };
  const double coarse = dev_at(257), fine = dev_at(513);
  CHECK(fine <= 1e-3);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("pre-Schrödinger keeps a uniform flow stationary") {
  const Grid g = Grid::line(0.0, 2 * M_PI, 128, Boundary::periodic);
  const WaveField psi0 = plane_wave(g, {2.0, 0});
  const Run run = evolve(psi0, PotentialSpec::free_particle(), split_cfg(1e-3, 1.0, Engine::pre_schrodinger));
  const Run lin = evolve(psi0, PotentialSpec::free_particle(), split_cfg(1e-3, 1.0));
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(std::abs(std::norm(run.snapshots.back().values[k]) - std::norm(psi0.values[k])) <= 1e-10);
    CHECK(std::abs(run.snapshots.back().values[k] - lin.snapshots.back().values[k]) <= 1e-10);
  }
}

TEST_CASE("pre-Schrödinger norm conservation") {
  const Grid g = Grid::line(-12.0, 12.0, 512, Boundary::dirichlet_zero);
  EvolutionConfig cfg = split_cfg(1e-3, 1.0, Engine::pre_schrodinger);
  cfg.integrator = Integrator::crank_nicolson;
  const Run run = evolve(gaussian_state(g, {1, 0}, {1, 0}, {0, 0}, 1.0), PotentialSpec::harmonic({1, 0}), cfg);
  CHECK(run.max_norm_drift <= 1e-8);
}

TEST_CASE("zeros inside the support stop the pre-Schrödinger engine") {
  const Grid g = Grid::line(-8.0, 8.0, 257, Boundary::dirichlet_zero);
  const MassMatrix m(1);
  EvolutionConfig cfg = split_cfg(1e-3, 0.1, Engine::pre_schrodinger);
  cfg.integrator = Integrator::crank_nicolson;
  const WaveField excited = harmonic_eigenstate(g, {1, 0}, {1, 0}, m, 1.0);
  try {
    step_pre_schrodinger(excited, PotentialSpec::free_particle(), cfg);
    FAIL("expected pre-caustic violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::pre_caustic);
  }
  const Run run = evolve(excited, PotentialSpec::free_particle(), cfg);
  CHECK(run.stopped_early);
  CHECK(run.snapshots.size() == 1);
  // The Schrödinger engine has no such restriction.
  cfg.engine = Engine::schrodinger;
  CHECK_NOTHROW(step_schrodinger(excited, PotentialSpec::free_particle(), cfg));
}

TEST_CASE("configuration rules") {
  const Grid per = Grid::line(-8, 8, 256, Boundary::periodic);
  const Grid dir = Grid::line(-8, 8, 256, Boundary::dirichlet_zero);
  EvolutionConfig cfg = split_cfg(1e-3, 1.0);
  CHECK_THROWS_AS(validate_evolution(dir, PotentialSpec::free_particle(), cfg), Error);
  cfg.integrator = Integrator::crank_nicolson;
  CHECK_THROWS_AS(validate_evolution(per, PotentialSpec::free_particle(), cfg), Error);
  CHECK_NOTHROW(validate_evolution(dir, PotentialSpec::free_particle(), cfg));
  cfg.dt = 0.5;  // dt * max V = 0.5 * 32 > pi
  try {
    validate_evolution(dir, PotentialSpec::harmonic({1, 0}), cfg);
    FAIL("expected stability rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
  }
  cfg.dt = 1e-3;
  cfg.engine = Engine::pre_schrodinger;
  const WaveField psi = gaussian_state(dir, {0, 0}, {1, 0}, {0, 0}, 1.0);
  CHECK_THROWS_AS(step_schrodinger(psi, PotentialSpec::free_particle(), cfg), Error);
}
