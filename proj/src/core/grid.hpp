#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace paleo {

using Complex = std::complex<double>;
using RealField = std::vector<double>;
using ComplexField = std::vector<Complex>;
using MaskField = std::vector<unsigned char>;

enum class Boundary { periodic, dirichlet_zero };

const char* boundary_name(Boundary b) noexcept;

/// A point in configuration space. Only the first `Grid::dim()` entries are used.
using Point = std::array<double, 2>;

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int n = 16;
};

/// Uniform 1D or 2D lattice. Node i of an axis sits at lo + i*h; periodic axes
/// exclude the `hi` endpoint, dirichlet axes include both endpoints.
/// Storage order is row-major with axis 0 fastest: index = j*n0 + i.
class Grid {
 public:
  static constexpr int kMinPoints = 16;

  Grid() = default;
  Grid(std::span<const Axis> axes, Boundary boundary);

  static Grid line(double lo, double hi, int n, Boundary b);
  static Grid plane(Axis x, Axis y, Boundary b);

  int dim() const noexcept { return dim_; }
  Boundary boundary() const noexcept { return boundary_; }
  bool periodic() const noexcept { return boundary_ == Boundary::periodic; }
  const Axis& axis(int a) const noexcept { return axes_[a]; }
  int n(int a) const noexcept { return axes_[a].n; }
  double h(int a) const noexcept { return h_[a]; }
  double lo(int a) const noexcept { return axes_[a].lo; }
  double hi(int a) const noexcept { return axes_[a].hi; }
  double extent(int a) const noexcept { return axes_[a].hi - axes_[a].lo; }
  std::size_t size() const noexcept { return size_; }
  /// Quadrature weight of one node (product of spacings).
  double cell_volume() const noexcept;

  double coord(int a, int i) const noexcept { return axes_[a].lo + i * h_[a]; }
  std::size_t index(int i, int j = 0) const noexcept {
    return static_cast<std::size_t>(j) * axes_[0].n + i;
  }
  Point point(std::size_t idx) const noexcept;
  /// Neighbour index along axis a at offset (±1, ±2...). Wraps on periodic axes;
  /// returns -1 when the neighbour falls off a dirichlet edge.
  long neighbour(std::size_t idx, int a, int offset) const noexcept;
  int coordinate_index(std::size_t idx, int a) const noexcept;

  bool contains(const Point& p) const noexcept;
  /// Maps a periodic point back into [lo, hi). No-op on dirichlet grids.
  Point wrap(Point p) const noexcept;

  bool same_shape(const Grid& o) const noexcept;
  std::string describe() const;

 private:
  int dim_ = 0;
  Boundary boundary_ = Boundary::periodic;
  std::array<Axis, 2> axes_{};
  std::array<double, 2> h_{};
  std::size_t size_ = 0;
};

/// Diagonal inverse-mass matrix m^{ii}, the form that multiplies momenta in H.
class MassMatrix {
 public:
  MassMatrix() = default;
  explicit MassMatrix(int dim, double inv = 1.0);
  MassMatrix(std::initializer_list<double> inverse_diagonal);
  static MassMatrix from_inverse(std::span<const double> inv);

  int dim() const noexcept { return dim_; }
  double inverse(int a) const noexcept { return inv_[a]; }
  double mass(int a) const noexcept { return 1.0 / inv_[a]; }
  double max_inverse() const noexcept;

 private:
  int dim_ = 1;
  std::array<double, 2> inv_{1.0, 1.0};
};

struct WaveField {
  Grid grid;
  ComplexField values;
  double time = 0.0;

  WaveField() = default;
  WaveField(Grid g, ComplexField v, double t = 0.0);

  double norm() const;  // L2 norm with node quadrature
  WaveField normalized() const;
  RealField density() const;
  bool finite() const;
};

}  // namespace paleo
