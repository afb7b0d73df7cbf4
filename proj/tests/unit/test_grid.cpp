#include <cmath>

#include "core/grid.hpp"
#include "core/operators.hpp"
#include "doctest.h"

using namespace paleo;

namespace {

RealField sample(const Grid& g, double (*f)(double, double)) {
  RealField out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point p = g.point(k);
    out[k] = f(p[0], p[1]);
  }
  return out;
}

}  // namespace

TEST_CASE("grid spacing follows the boundary convention") {
  const Grid p = Grid::line(0.0, 1.0, 16, Boundary::periodic);
  const Grid d = Grid::line(0.0, 1.0, 16, Boundary::dirichlet_zero);
  CHECK(p.h(0) == doctest::Approx(1.0 / 16));
  CHECK(d.h(0) == doctest::Approx(1.0 / 15));
  CHECK(d.coord(0, 15) == doctest::Approx(1.0));
  CHECK_THROWS_AS(Grid::line(0.0, 1.0, 8, Boundary::periodic), Error);
  CHECK_THROWS_AS(Grid::line(1.0, 0.0, 32, Boundary::periodic), Error);
}

TEST_CASE("periodic neighbours wrap, dirichlet neighbours stop") {
  const Grid p = Grid::line(0.0, 1.0, 16, Boundary::periodic);
  CHECK(p.neighbour(0, 0, -1) == 15);
  CHECK(p.neighbour(15, 0, 1) == 0);
  const Grid d = Grid::line(0.0, 1.0, 16, Boundary::dirichlet_zero);
  CHECK(d.neighbour(0, 0, -1) == -1);
  CHECK(d.neighbour(15, 0, 1) == -1);
}

TEST_CASE("gradient of a linear function is exact in the interior and at edges") {
  const Grid g = Grid::line(-1.0, 1.0, 41, Boundary::dirichlet_zero);
  const RealField f = sample(g, [](double x, double) { return x; });
  const auto d = gradient(f, g);
  for (double x : d[0]) CHECK(std::abs(x - 1.0) < 1e-10);
}

TEST_CASE("constants are annihilated exactly") {
  const Grid g = Grid::plane({-1, 1, 24}, {-2, 2, 20}, Boundary::dirichlet_zero);
  const RealField f(g.size(), 3.7);
  const auto d = gradient(f, g);
  const RealField l = laplacian(f, g, MassMatrix{0.5, 2.0});
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(d[0][k] == 0.0);
    CHECK(d[1][k] == 0.0);
    CHECK(l[k] == 0.0);
  }
}

TEST_CASE("gradient of sin converges at second order") {
  auto err = [](int n) {
    const Grid g = Grid::line(0.0, 2 * M_PI, n, Boundary::periodic);
    const RealField f = sample(g, [](double x, double) { return std::sin(3 * x); });
    const auto d = gradient(f, g);
    double e = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) e = std::max(e, std::abs(d[0][k] - 3 * std::cos(3 * g.point(k)[0])));
    return e;
  };
  const double r = err(64) / err(128);
  CHECK(r == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("laplacian of quadratics") {
  const Grid g1 = Grid::line(-1.0, 1.0, 33, Boundary::dirichlet_zero);
  const RealField f1 = sample(g1, [](double x, double) { return x * x; });
  const RealField l1 = laplacian(f1, g1, MassMatrix(1));
  for (double x : l1) CHECK(std::abs(x - 2.0) < 1e-8);

  const Grid g2 = Grid::plane({-1, 1, 33}, {-1, 1, 33}, Boundary::dirichlet_zero);
  const RealField f2 = sample(g2, [](double x, double y) { return x * x + y * y; });
  const RealField l2 = laplacian(f2, g2, MassMatrix(2));
  for (double x : l2) CHECK(std::abs(x - 4.0) < 1e-8);

  // Mass weighting: m^{xx}=0.5, m^{yy}=3 gives 2*0.5 + 2*3.
  const RealField l3 = laplacian(f2, g2, MassMatrix{0.5, 3.0});
  for (double x : l3) CHECK(std::abs(x - 7.0) < 1e-8);
}

TEST_CASE("laplacian converges at second order") {
  auto err = [](int n) {
    const Grid g = Grid::plane({0, 2 * M_PI, n}, {0, 2 * M_PI, n}, Boundary::periodic);
    const RealField f = sample(g, [](double x, double y) { return std::sin(x) * std::cos(2 * y); });
    const RealField l = laplacian(f, g, MassMatrix(2));
    double e = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point p = g.point(k);
      e = std::max(e, std::abs(l[k] + 5 * std::sin(p[0]) * std::cos(2 * p[1])));
    }
    return e;
  };
  CHECK(err(32) / err(64) == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("interpolation") {
  const Grid g = Grid::line(-1.0, 1.0, 21, Boundary::dirichlet_zero);
  const RealField lin = sample(g, [](double x, double) { return x; });
  CHECK(interpolate(lin, g, Point{0.3, 0}) == doctest::Approx(0.3).epsilon(1e-12));
  const RealField c(g.size(), -2.5);
  CHECK(interpolate(c, g, Point{0.777, 0}) == doctest::Approx(-2.5));
  for (int i = 0; i < g.n(0); ++i) CHECK(interpolate(lin, g, g.point(i)) == doctest::Approx(lin[i]));

  const RealField s = sample(g, [](double x, double) { return std::sin(x); });
  const double mid = g.coord(0, 7) + 0.5 * g.h(0);
  CHECK(std::abs(interpolate(s, g, Point{mid, 0}) - std::sin(mid)) < g.h(0) * g.h(0));

  CHECK_THROWS_AS(interpolate(lin, g, Point{1.5, 0}), Error);
  try {
    interpolate(lin, g, Point{1.5, 0});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::out_of_domain);
    CHECK(std::string(e.what()).find("1.5") != std::string::npos);
  }
}

TEST_CASE("periodic interpolation accepts images") {
  const Grid g = Grid::line(0.0, 1.0, 32, Boundary::periodic);
  const RealField f = sample(g, [](double x, double) { return std::cos(2 * M_PI * x); });
  CHECK(interpolate(f, g, Point{0.25, 0}) == doctest::Approx(interpolate(f, g, Point{1.25, 0})));
  CHECK(interpolate(f, g, Point{-0.75, 0}) == doctest::Approx(interpolate(f, g, Point{0.25, 0})));
}

TEST_CASE("bilinear interpolation is exact for bilinear fields") {
  const Grid g = Grid::plane({-1, 1, 17}, {0, 3, 19}, Boundary::dirichlet_zero);
  const RealField f = sample(g, [](double x, double y) { return 1 + 2 * x - y + 0.5 * x * y; });
  const Point p{0.123, 2.71};
  CHECK(interpolate(f, g, p) == doctest::Approx(1 + 2 * p[0] - p[1] + 0.5 * p[0] * p[1]).epsilon(1e-12));
}

TEST_CASE("structural errors") {
  const Grid g = Grid::line(0.0, 1.0, 16, Boundary::periodic);
  const RealField bad(10, 0.0);
  CHECK_THROWS_AS(gradient(bad, g), Error);
  CHECK_THROWS_AS(laplacian(RealField(16, 0.0), g, MassMatrix(2)), Error);
  CHECK_THROWS_AS((MassMatrix{1.0, -1.0}), Error);
}

TEST_CASE("wave field normalization") {
  const Grid g = Grid::line(-5.0, 5.0, 128, Boundary::periodic);
  ComplexField v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) v[k] = std::exp(-g.point(k)[0] * g.point(k)[0]) * Complex(2, 1);
  const WaveField w(g, v);
  CHECK(std::abs(w.normalized().norm() - 1.0) <= 1e-12);
  v[3] = Complex(NAN, 0);
  CHECK_THROWS_AS(WaveField(g, v), Error);
}
