#include "core/operators.hpp"

#include <algorithm>
#include <sstream>

namespace paleo {

CellLocation locate(const Grid& grid, const Point& p_in) {
  if (!grid.contains(p_in)) {
    std::ostringstream os;
    os << "point (" << p_in[0];
    if (grid.dim() == 2) os << ", " << p_in[1];
    os << ") lies outside the dirichlet domain " << grid.describe();
    fail(ErrorCode::out_of_domain, os.str());
  }
  const Point p = grid.wrap(p_in);
  CellLocation loc;
  for (int a = 0; a < grid.dim(); ++a) {
    const double s = (p[a] - grid.lo(a)) / grid.h(a);
    int i = static_cast<int>(std::floor(s));
    const int last = grid.periodic() ? grid.n(a) - 1 : grid.n(a) - 2;
    i = std::clamp(i, 0, last);
    loc.base[a] = i;
    loc.frac[a] = std::clamp(s - i, 0.0, 1.0);
  }
  return loc;
}

Stencil multilinear_stencil(const Grid& grid, const CellLocation& loc) {
  Stencil s;
  auto wrap = [&](int a, int i) { return grid.periodic() ? i % grid.n(a) : i; };
  if (grid.dim() == 1) {
    s.count = 2;
    s.nodes = {grid.index(loc.base[0]), grid.index(wrap(0, loc.base[0] + 1)), 0, 0};
    s.weights = {1.0 - loc.frac[0], loc.frac[0], 0.0, 0.0};
    return s;
  }
  const int i0 = loc.base[0], j0 = loc.base[1];
  const int i1 = wrap(0, i0 + 1), j1 = wrap(1, j0 + 1);
  const double fx = loc.frac[0], fy = loc.frac[1];
  s.count = 4;
  s.nodes = {grid.index(i0, j0), grid.index(i1, j0), grid.index(i0, j1), grid.index(i1, j1)};
  s.weights = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  return s;
}

double integrate(const RealField& f, const Grid& grid) {
  detail::check_field(f.size(), grid);
  double s = 0.0;
  for (double x : f) s += x;
  return s * grid.cell_volume();
}

double max_abs(const RealField& f) {
  double m = 0.0;
  for (double x : f) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace paleo
