#include <cmath>

#include "core/madelung.hpp"
#include "core/states.hpp"
#include "doctest.h"

using namespace paleo;

namespace {

double max_off_mask(const RealField& f, const FlowField& flow, const MaskField* keep = nullptr) {
  double m = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (flow.masked(k) || (keep && !(*keep)[k])) continue;
    m = std::max(m, std::abs(f[k]));
  }
  return m;
}

}  // namespace

TEST_CASE("constant wave function has no flow") {
  const Grid g = Grid::line(0.0, 4.0, 64, Boundary::periodic);
  const WaveField psi = WaveField(g, ComplexField(g.size(), Complex(1, 0))).normalized();
  const FlowField f = polar_decompose(psi, MassMatrix(1), 1.0);
  CHECK(max_abs(f.v[0]) == 0.0);
  CHECK(max_abs(f.u[0]) == 0.0);
  CHECK(max_abs(f.q_pot) == 0.0);
  CHECK(integrate(f.rho, g) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("plane wave velocity is k to 1e-6") {
  const double L = 2 * M_PI;
  const Grid g = Grid::line(0.0, L, 128, Boundary::periodic);
  for (double k : {1.0, 5.0, 17.0}) {
    const FlowField f = polar_decompose(plane_wave(g, {k, 0}), MassMatrix(1), 1.0);
    for (double v : f.v[0]) CHECK(std::abs(v - k) <= 1e-6);
  }
}

TEST_CASE("gaussian osmotic velocity") {
  // rho ∝ exp(-x^2/sigma^2) -> u = -hbar x / sigma^2
  const double sigma = 1.3, hbar = 0.7;
  auto err = [&](int n) {
    const Grid g = Grid::line(-8.0, 8.0, n, Boundary::dirichlet_zero);
    const FlowField f = polar_decompose(gaussian_state(g, {0, 0}, {sigma, 0}, {0, 0}, hbar), MassMatrix(1), hbar);
    double e = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (f.masked(k) || f.rho[k] < 1e-6 * f.max_rho()) continue;
      e = std::max(e, std::abs(f.u[0][k] + hbar * g.point(k)[0] / (sigma * sigma)));
    }
    return e;
  };
  CHECK(err(512) < 1e-2);
  CHECK(err(256) / err(512) == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("quantum potential oracles") {
  const Grid g = Grid::line(-6.0, 6.0, 601, Boundary::dirichlet_zero);
  RealField rho(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) rho[k] = std::exp(-g.point(k)[0] * g.point(k)[0]);
  const RealField q = quantum_potential(rho, g, MassMatrix(1), 1.0);
  const double h2 = g.h(0) * g.h(0);
  for (std::size_t k = 1; k + 1 < g.size(); ++k) {
    const double x = g.point(k)[0];
    if (std::abs(x) > 4.0) continue;
    CHECK(std::abs(q[k] - 0.5 * (1 - x * x)) <= 2.0 * h2 * (1 + std::pow(x, 4)));
  }

  RealField flat(g.size(), 0.3);
  for (double x : quantum_potential(flat, g, MassMatrix(1), 1.0)) CHECK(x == 0.0);

  // sqrt(rho) = cos x on (-pi/2, pi/2): Q = +hbar^2/2
  const Grid gc = Grid::line(-1.2, 1.2, 241, Boundary::dirichlet_zero);
  RealField rc(gc.size());
  for (std::size_t k = 0; k < gc.size(); ++k) rc[k] = std::pow(std::cos(gc.point(k)[0]), 2);
  const RealField qc = quantum_potential(rc, gc, MassMatrix(1), 1.0);
  for (std::size_t k = 1; k + 1 < gc.size(); ++k) CHECK(std::abs(qc[k] - 0.5) < 1e-4);
}

TEST_CASE("quantum potential is scale invariant and masks nodes") {
  const Grid g = Grid::line(-6.0, 6.0, 256, Boundary::dirichlet_zero);
  RealField rho(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) rho[k] = std::exp(-g.point(k)[0] * g.point(k)[0]);
  RealField scaled = rho;
  for (double& x : scaled) x *= 37.5;
  const RealField a = quantum_potential(rho, g, MassMatrix(1), 1.0);
  const RealField b = quantum_potential(scaled, g, MassMatrix(1), 1.0);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (std::isfinite(a[k])) CHECK(std::abs(a[k] - b[k]) <= 1e-9 * (1 + std::abs(a[k])));
  CHECK(std::isnan(a.front()));  // exp(-36) < 1e-12 relative: masked
}

TEST_CASE("densitized identity on a gaussian ground state") {
  const Grid g = Grid::line(-8.0, 8.0, 512, Boundary::dirichlet_zero);
  const FlowField f = polar_decompose(gaussian_state(g, {0, 0}, {1, 0}, {0, 0}, 1.0), MassMatrix(1), 1.0);
  CHECK(densitized_q_identity_residual(f) <= 1e-4);

  const Grid gp = Grid::line(0.0, 3.0, 64, Boundary::periodic);
  const FlowField flat = polar_decompose(plane_wave(gp, {0, 0}), MassMatrix(1), 1.0);
  CHECK(densitized_q_identity_residual(flat) == 0.0);
}

TEST_CASE("densitized identity on the first excited state converges at second order") {
  auto res = [](int n) {
    const Grid g = Grid::line(-8.0, 8.0, n, Boundary::dirichlet_zero);
    const MassMatrix m(1);
    return densitized_q_identity_residual(polar_decompose(harmonic_eigenstate(g, {1, 0}, {1, 0}, m, 1.0), m, 1.0));
  };
  const double r1 = res(257), r2 = res(513);
  CHECK(r2 < 2e-3);
  CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("global phase leaves every flow variable untouched") {
  const Grid g = Grid::plane({-5, 5, 64}, {-5, 5, 64}, Boundary::dirichlet_zero);
  const WaveField psi = gaussian_state(g, {0.5, -0.3}, {1.0, 1.4}, {0.7, -1.1}, 1.0);
  WaveField rot = psi;
  const Complex c = std::polar(1.0, 2.345);
  for (auto& z : rot.values) z *= c;
  const MassMatrix m{1.0, 0.5};
  const FlowField a = polar_decompose(psi, m, 1.0), b = polar_decompose(rot, m, 1.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(a.node_mask[k] == b.node_mask[k]);
    CHECK(std::abs(a.rho[k] - b.rho[k]) <= 1e-15);
    for (int ax = 0; ax < 2; ++ax) {
      CHECK(std::abs(a.v[ax][k] - b.v[ax][k]) <= 1e-12 * (1 + std::abs(a.v[ax][k])));
      CHECK(std::abs(a.u[ax][k] - b.u[ax][k]) <= 1e-12 * (1 + std::abs(a.u[ax][k])));
    }
    if (!a.masked(k)) CHECK(std::abs(a.q_pot[k] - b.q_pot[k]) <= 1e-12 * (1 + std::abs(a.q_pot[k])));
  }
}

TEST_CASE("velocity matches the gradient of a locally unwrapped phase") {
  // S = 3 sin(x): phase winds several times across the box.
  auto err = [](int n) {
    const Grid g = Grid::line(-6.0, 6.0, n, Boundary::dirichlet_zero);
    const WaveField psi = polar_state(
        g, [](const Point& q) { return std::exp(-q[0] * q[0] / 4); }, [](const Point& q) { return 3 * std::sin(q[0]) + 4 * q[0]; },
        1.0);
    const FlowField f = polar_decompose(psi, MassMatrix(1), 1.0);
    double e = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (!f.masked(k)) e = std::max(e, std::abs(f.v[0][k] - 3 * std::cos(g.point(k)[0]) - 4));
    return e;
  };
  CHECK(err(512) < 2e-3);
  CHECK(err(256) / err(512) == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("rejects unnormalized input") {
  const Grid g = Grid::line(0.0, 1.0, 32, Boundary::periodic);
  const WaveField psi(g, ComplexField(g.size(), Complex(2, 0)));
  try {
    polar_decompose(psi, MassMatrix(1), 1.0);
    FAIL("expected a contract error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::contract);
  }
}

TEST_CASE("line integrals") {
  const Grid g = Grid::plane({-6, 6, 128}, {-6, 6, 128}, Boundary::dirichlet_zero);
  const MassMatrix m{1.0, 1.0};
  const FlowField gauss = polar_decompose(gaussian_state(g, {0, 0}, {1.5, 1.5}, {0, 0}, 1.0), m, 1.0);
  std::vector<Point> circle;
  for (int i = 0; i < 256; ++i) circle.push_back({std::cos(2 * M_PI * i / 256), std::sin(2 * M_PI * i / 256)});
  CHECK(std::abs(phase_line_integral(gauss, circle, true)) <= 1e-6);

  const Grid gp = Grid::line(0.0, 2 * M_PI, 256, Boundary::periodic);
  const double k = 3.0, hbar = 0.5;
  // psi = e^{ikx}: v = hbar k, line integral of m v dx from a to b = hbar k (b - a).
  const FlowField pw = polar_decompose(plane_wave(gp, {k, 0}), MassMatrix(1), hbar);
  std::vector<Point> seg;
  for (int i = 0; i <= 40; ++i) seg.push_back({0.5 + 4.0 * i / 40, 0});
  CHECK(std::abs(phase_line_integral(pw, seg) - hbar * k * 4.0) <= 1e-6);
}

TEST_CASE("line integral refuses paths near nodes") {
  const Grid g = Grid::line(-4.0, 4.0, 64, Boundary::dirichlet_zero);
  const MassMatrix m(1);
  const FlowField f = polar_decompose(harmonic_eigenstate(g, {1, 0}, {1, 0}, m, 1.0), m, 1.0);
  FlowField masked = f;
  masked.node_mask[32] = 1;
  const std::vector<Point> path{{-1, 0}, {g.coord(0, 32) + 0.01, 0}, {1, 0}};
  try {
    phase_line_integral(masked, path);
    FAIL("expected node encounter");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::node_encounter);
  }
}

TEST_CASE("discrete curl vanishes off nodes at second order") {
  auto curl = [](int n) {
    const Grid g = Grid::plane({-5, 5, n}, {-5, 5, n}, Boundary::dirichlet_zero);
    const WaveField psi = polar_state(
        g, [](const Point& q) { return std::exp(-(q[0] * q[0] + q[1] * q[1]) / 4); },
        [](const Point& q) { return std::sin(q[0]) * std::cos(q[1]) + 0.3 * q[0] * q[1]; }, 1.0);
    const FlowField f = polar_decompose(psi, MassMatrix{1.0, 2.0}, 1.0);
    const MaskField keep = evaluation_support(f, 1e-8);
    return max_off_mask(flow_curl(f), f, &keep);
  };
  // v_x and v_y are exact central differences of the nodal phase, so the
  // discrete mixed derivatives commute up to roundoff.
  CHECK(curl(64) < 1e-9);
  CHECK(curl(128) < 1e-9);
}
