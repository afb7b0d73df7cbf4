#pragma once

#include <string>

#include "core/grid.hpp"

namespace paleo {

/// External potential V(q). Analytic kinds evaluate V and grad V exactly;
/// the tabulated kind interpolates nodal values on the grid it was built for.
class PotentialSpec {
 public:
  enum class Kind { free, harmonic, barrier, double_well, tabulated };

  static PotentialSpec free_particle();
  /// V = sum_i omega_i^2 q_i^2 / (2 m^{ii}).
  static PotentialSpec harmonic(std::array<double, 2> omega);
  /// Smooth Gaussian barrier V = height * exp(-x^2 / width^2) along axis 0.
  static PotentialSpec barrier(double height, double width);
  /// V = a (x^2 - b^2)^2 along axis 0, a > 0.
  static PotentialSpec double_well(double a, double b);
  static PotentialSpec tabulated(const Grid& grid, RealField values);

  Kind kind() const noexcept { return kind_; }
  const char* name() const noexcept;
  std::array<double, 2> omega() const noexcept { return {p_[0], p_[1]}; }

  double value(const Point& q, const MassMatrix& mass) const;
  Point gradient(const Point& q, const MassMatrix& mass) const;
  RealField sample(const Grid& grid, const MassMatrix& mass) const;

 private:
  Kind kind_ = Kind::free;
  std::array<double, 2> p_{0.0, 0.0};
  Grid table_grid_;
  RealField table_;
};

}  // namespace paleo
