#include "core/states.hpp"

#include <cmath>

namespace paleo {

namespace {

WaveField build(const Grid& grid, const std::function<Complex(const Point&)>& f) {
  ComplexField v(grid.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(grid.point(k));
  return WaveField(grid, std::move(v)).normalized();
}

}  // namespace

double hermite_function(int n, double x) {
  // Stable three-term recurrence on the normalized functions.
  double prev = 0.0;
  double cur = std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x);
  for (int k = 0; k < n; ++k) {
    const double next = std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

WaveField gaussian_state(const Grid& grid, Point center, Point width, Point momentum, double hbar) {
  for (int a = 0; a < grid.dim(); ++a)
    require(width[a] > 0.0, ErrorCode::invalid_argument, "gaussian width must be positive");
  require(hbar > 0.0, ErrorCode::invalid_argument, "hbar must be positive");
  return build(grid, [&](const Point& q) {
    double re = 0.0, ph = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      const double d = q[a] - center[a];
      re -= d * d / (2.0 * width[a] * width[a]);
      ph += momentum[a] * q[a] / hbar;
    }
    return std::exp(Complex(re, ph));
  });
}

WaveField plane_wave(const Grid& grid, Point k) {
  return build(grid, [&](const Point& q) {
    double ph = 0.0;
    for (int a = 0; a < grid.dim(); ++a) ph += k[a] * q[a];
    return std::exp(Complex(0.0, ph));
  });
}

WaveField harmonic_eigenstate(const Grid& grid, std::array<int, 2> index, std::array<double, 2> omega,
                              const MassMatrix& mass, double hbar) {
  require(mass.dim() == grid.dim(), ErrorCode::structural, "mass matrix dimension does not match grid");
  for (int a = 0; a < grid.dim(); ++a) {
    require(index[a] >= 0, ErrorCode::invalid_argument, "eigenstate index must be >= 0");
    require(omega[a] > 0.0, ErrorCode::invalid_argument, "eigenstate needs omega > 0");
  }
  return build(grid, [&](const Point& q) {
    double v = 1.0;
    for (int a = 0; a < grid.dim(); ++a) {
      const double scale = std::sqrt(mass.mass(a) * omega[a] / hbar);
      v *= hermite_function(index[a], scale * q[a]);
    }
    return Complex(v, 0.0);
  });
}

double harmonic_energy(std::array<int, 2> index, std::array<double, 2> omega, double hbar, int dim) {
  double e = 0.0;
  for (int a = 0; a < dim; ++a) e += hbar * omega[a] * (index[a] + 0.5);
  return e;
}

WaveField polar_state(const Grid& grid, const std::function<double(const Point&)>& rho,
                      const std::function<double(const Point&)>& phase, double hbar) {
  return build(grid, [&](const Point& q) {
    const double r = rho(q);
    require(r >= 0.0, ErrorCode::invalid_argument, "density must be non-negative");
    return std::sqrt(r) * std::exp(Complex(0.0, phase(q) / hbar));
  });
}

WaveField superpose(const std::vector<Complex>& weights, const std::vector<WaveField>& parts) {
  require(!parts.empty() && weights.size() == parts.size(), ErrorCode::invalid_argument,
          "superposition needs one weight per part");
  const Grid& g = parts.front().grid;
  ComplexField v(g.size(), Complex{});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    require(parts[i].grid.same_shape(g), ErrorCode::structural, "superposed states live on different grids");
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += weights[i] * parts[i].values[k];
  }
  return WaveField(g, std::move(v)).normalized();
}

WaveField tensor_product(const WaveField& a, const WaveField& b) {
  require(a.grid.dim() == 1 && b.grid.dim() == 1, ErrorCode::structural, "tensor product takes two 1D states");
  require(a.grid.boundary() == b.grid.boundary(), ErrorCode::structural, "factor grids differ in boundary type");
  const Grid g = Grid::plane(a.grid.axis(0), b.grid.axis(0), a.grid.boundary());
  ComplexField v(g.size());
  for (int j = 0; j < g.n(1); ++j)
    for (int i = 0; i < g.n(0); ++i) v[g.index(i, j)] = a.values[i] * b.values[j];
  return WaveField(g, std::move(v), a.time);
}

}  // namespace paleo
