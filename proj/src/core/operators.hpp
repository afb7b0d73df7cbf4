#pragma once

#include <cmath>
#include <vector>

#include "core/grid.hpp"

namespace paleo {

/// Second-order finite differences on a Grid. Periodic axes wrap; dirichlet
/// axes use one-sided second-order stencils on the two edge nodes.

template <class T>
using Field = std::vector<T>;

template <class T>
using VectorField = std::vector<Field<T>>;  // one component per axis

namespace detail {
inline void check_field(std::size_t n, const Grid& grid) {
  require(grid.dim() > 0, ErrorCode::structural, "operator applied on an empty grid");
  require(n == grid.size(), ErrorCode::structural,
          "field has " + std::to_string(n) + " values but grid has " + std::to_string(grid.size()));
}
inline void check_mass(const Grid& grid, const MassMatrix& mass) {
  require(mass.dim() == grid.dim(), ErrorCode::structural, "mass matrix dimension does not match grid");
}
}  // namespace detail

/// d f / d x_a at node k.
template <class T>
T partial_at(const Field<T>& f, const Grid& grid, std::size_t k, int a) {
  const double h = grid.h(a);
  const long m1 = grid.neighbour(k, a, -1);
  const long p1 = grid.neighbour(k, a, +1);
  // Written on differences from f[k] so constants cancel exactly.
  if (m1 >= 0 && p1 >= 0) return (f[p1] - f[m1]) / (2.0 * h);
  if (m1 < 0) {
    const long p2 = grid.neighbour(k, a, +2);
    return (4.0 * (f[p1] - f[k]) - (f[p2] - f[k])) / (2.0 * h);
  }
  const long m2 = grid.neighbour(k, a, -2);
  return -(4.0 * (f[m1] - f[k]) - (f[m2] - f[k])) / (2.0 * h);
}

/// d^2 f / d x_a^2 at node k.
template <class T>
T second_partial_at(const Field<T>& f, const Grid& grid, std::size_t k, int a) {
  const double h2 = grid.h(a) * grid.h(a);
  const long m1 = grid.neighbour(k, a, -1);
  const long p1 = grid.neighbour(k, a, +1);
  if (m1 >= 0 && p1 >= 0) return ((f[p1] - f[k]) + (f[m1] - f[k])) / h2;
  const int s = m1 < 0 ? 1 : -1;
  const long n1 = grid.neighbour(k, a, s), n2 = grid.neighbour(k, a, 2 * s), n3 = grid.neighbour(k, a, 3 * s);
  return (-5.0 * (f[n1] - f[k]) + 4.0 * (f[n2] - f[k]) - (f[n3] - f[k])) / h2;
}

template <class T>
VectorField<T> gradient(const Field<T>& f, const Grid& grid) {
  detail::check_field(f.size(), grid);
  VectorField<T> g(grid.dim(), Field<T>(f.size()));
  for (int a = 0; a < grid.dim(); ++a)
    for (std::size_t k = 0; k < f.size(); ++k) g[a][k] = partial_at(f, grid, k, a);
  return g;
}

/// sum_a m^{aa} d^2 f / d x_a^2
template <class T>
Field<T> laplacian(const Field<T>& f, const Grid& grid, const MassMatrix& mass) {
  detail::check_field(f.size(), grid);
  detail::check_mass(grid, mass);
  Field<T> out(f.size(), T{});
  for (int a = 0; a < grid.dim(); ++a) {
    const double w = mass.inverse(a);
    for (std::size_t k = 0; k < f.size(); ++k) out[k] += w * second_partial_at(f, grid, k, a);
  }
  return out;
}

/// Cell containing a point: lower-left node indices and fractional offsets.
struct CellLocation {
  std::array<int, 2> base{0, 0};
  std::array<double, 2> frac{0.0, 0.0};
};

/// Throws out_of_domain for points outside a dirichlet grid.
CellLocation locate(const Grid& grid, const Point& p);

/// Node indices of the 2^dim corners of a located cell, with their weights.
struct Stencil {
  std::array<std::size_t, 4> nodes{};
  std::array<double, 4> weights{};
  int count = 0;
};
Stencil multilinear_stencil(const Grid& grid, const CellLocation& loc);

template <class T>
T interpolate(const Field<T>& f, const Grid& grid, const Point& p) {
  detail::check_field(f.size(), grid);
  const Stencil s = multilinear_stencil(grid, locate(grid, p));
  T acc{};
  for (int c = 0; c < s.count; ++c) acc += s.weights[c] * f[s.nodes[c]];
  return acc;
}

/// Node-quadrature integral, sum(f) * cell volume. Matches the discrete norm
/// conserved by the integrators; dirichlet edge nodes carry zero wave values.
double integrate(const RealField& f, const Grid& grid);
double max_abs(const RealField& f);

}  // namespace paleo
