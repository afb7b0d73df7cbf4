#include "core/potential.hpp"

#include <cmath>

#include "core/operators.hpp"

namespace paleo {

PotentialSpec PotentialSpec::free_particle() { return PotentialSpec{}; }

PotentialSpec PotentialSpec::harmonic(std::array<double, 2> omega) {
  require(omega[0] >= 0.0 && omega[1] >= 0.0, ErrorCode::invalid_argument, "harmonic frequencies must be >= 0");
  PotentialSpec p;
  p.kind_ = Kind::harmonic;
  p.p_ = omega;
  return p;
}

PotentialSpec PotentialSpec::barrier(double height, double width) {
  require(width > 0.0, ErrorCode::invalid_argument, "barrier width must be positive");
  PotentialSpec p;
  p.kind_ = Kind::barrier;
  p.p_ = {height, width};
  return p;
}

PotentialSpec PotentialSpec::double_well(double a, double b) {
  require(a > 0.0, ErrorCode::invalid_argument, "double-well stiffness must be positive");
  PotentialSpec p;
  p.kind_ = Kind::double_well;
  p.p_ = {a, b};
  return p;
}

PotentialSpec PotentialSpec::tabulated(const Grid& grid, RealField values) {
  require(values.size() == grid.size(), ErrorCode::structural, "tabulated potential does not match grid resolution");
  for (double x : values) require(std::isfinite(x), ErrorCode::invalid_argument, "tabulated potential must be finite");
  PotentialSpec p;
  p.kind_ = Kind::tabulated;
  p.table_grid_ = grid;
  p.table_ = std::move(values);
  return p;
}

const char* PotentialSpec::name() const noexcept {
  switch (kind_) {
    case Kind::free: return "free";
    case Kind::harmonic: return "harmonic";
    case Kind::barrier: return "barrier";
    case Kind::double_well: return "double-well";
    case Kind::tabulated: return "tabulated";
  }
  return "?";
}

double PotentialSpec::value(const Point& q, const MassMatrix& mass) const {
  switch (kind_) {
    case Kind::free: return 0.0;
    case Kind::harmonic: {
      double v = 0.0;
      for (int a = 0; a < mass.dim(); ++a) v += 0.5 * p_[a] * p_[a] * q[a] * q[a] / mass.inverse(a);
      return v;
    }
    case Kind::barrier: return p_[0] * std::exp(-q[0] * q[0] / (p_[1] * p_[1]));
    case Kind::double_well: {
      const double d = q[0] * q[0] - p_[1] * p_[1];
      return p_[0] * d * d;
    }
    case Kind::tabulated: return interpolate(table_, table_grid_, q);
  }
  return 0.0;
}

Point PotentialSpec::gradient(const Point& q, const MassMatrix& mass) const {
  Point g{0.0, 0.0};
  switch (kind_) {
    case Kind::free: break;
    case Kind::harmonic:
      for (int a = 0; a < mass.dim(); ++a) g[a] = p_[a] * p_[a] * q[a] / mass.inverse(a);
      break;
    case Kind::barrier:
      g[0] = -2.0 * q[0] / (p_[1] * p_[1]) * p_[0] * std::exp(-q[0] * q[0] / (p_[1] * p_[1]));
      break;
    case Kind::double_well:
      g[0] = 4.0 * p_[0] * q[0] * (q[0] * q[0] - p_[1] * p_[1]);
      break;
    case Kind::tabulated: {
      // Central difference of the interpolant at half a cell.
      for (int a = 0; a < table_grid_.dim(); ++a) {
        const double d = 0.5 * table_grid_.h(a);
        Point qp = q, qm = q;
        qp[a] += d;
        qm[a] -= d;
        if (!table_grid_.periodic()) {
          qp[a] = std::min(qp[a], table_grid_.hi(a));
          qm[a] = std::max(qm[a], table_grid_.lo(a));
        }
        g[a] = (interpolate(table_, table_grid_, qp) - interpolate(table_, table_grid_, qm)) / (qp[a] - qm[a]);
      }
      break;
    }
  }
  return g;
}

RealField PotentialSpec::sample(const Grid& grid, const MassMatrix& mass) const {
  if (kind_ == Kind::tabulated) {
    require(grid.same_shape(table_grid_), ErrorCode::structural, "tabulated potential sampled on a different grid");
    return table_;
  }
  RealField out(grid.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = value(grid.point(k), mass);
  return out;
}

}  // namespace paleo
