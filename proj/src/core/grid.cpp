#include "core/grid.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace paleo {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::structural: return "structural";
    case ErrorCode::config: return "config";
    case ErrorCode::contract: return "contract";
    case ErrorCode::out_of_domain: return "out-of-domain";
    case ErrorCode::node_encounter: return "node-encounter";
    case ErrorCode::pre_caustic: return "pre-caustic-violation";
    case ErrorCode::no_convergence: return "no-convergence";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::io: return "io";
    case ErrorCode::no_classical_path: return "no-classical-path";
    case ErrorCode::conjugate_point: return "conjugate-point";
    case ErrorCode::horizon_too_short: return "horizon-too-short";
  }
  return "unknown";
}

const char* boundary_name(Boundary b) noexcept {
  return b == Boundary::periodic ? "periodic" : "dirichlet";
}

Grid::Grid(std::span<const Axis> axes, Boundary boundary) : boundary_(boundary) {
  require(axes.size() == 1 || axes.size() == 2, ErrorCode::invalid_argument,
          "grid dimension must be 1 or 2");
  dim_ = static_cast<int>(axes.size());
  std::size_t total = 1;
  for (int a = 0; a < dim_; ++a) {
    const Axis& ax = axes[a];
    require(ax.n >= kMinPoints, ErrorCode::invalid_argument,
            "grid axis needs at least 16 points, got " + std::to_string(ax.n));
    require(std::isfinite(ax.lo) && std::isfinite(ax.hi) && ax.hi > ax.lo,
            ErrorCode::invalid_argument, "grid axis needs lo < hi");
    axes_[a] = ax;
    h_[a] = periodic() ? (ax.hi - ax.lo) / ax.n : (ax.hi - ax.lo) / (ax.n - 1);
    require(h_[a] > 0.0, ErrorCode::invalid_argument, "grid spacing underflow");
    require(total <= std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(ax.n),
            ErrorCode::invalid_argument, "grid point count overflows the address space");
    total *= static_cast<std::size_t>(ax.n);
  }
  require(total <= std::numeric_limits<std::size_t>::max() / sizeof(Complex),
          ErrorCode::invalid_argument, "grid too large to allocate");
  size_ = total;
}

Grid Grid::line(double lo, double hi, int n, Boundary b) {
  const Axis ax{lo, hi, n};
  return Grid(std::span<const Axis>(&ax, 1), b);
}

Grid Grid::plane(Axis x, Axis y, Boundary b) {
  const std::array<Axis, 2> ax{x, y};
  return Grid(ax, b);
}

double Grid::cell_volume() const noexcept {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= h_[a];
  return v;
}

int Grid::coordinate_index(std::size_t idx, int a) const noexcept {
  if (a == 0) return static_cast<int>(idx % axes_[0].n);
  return static_cast<int>(idx / axes_[0].n);
}

Point Grid::point(std::size_t idx) const noexcept {
  Point p{0.0, 0.0};
  for (int a = 0; a < dim_; ++a) p[a] = coord(a, coordinate_index(idx, a));
  return p;
}

long Grid::neighbour(std::size_t idx, int a, int offset) const noexcept {
  const int n_a = axes_[a].n;
  int i = coordinate_index(idx, a) + offset;
  if (periodic()) {
    i %= n_a;
    if (i < 0) i += n_a;
  } else if (i < 0 || i >= n_a) {
    return -1;
  }
  if (a == 0) return static_cast<long>(idx - coordinate_index(idx, 0) + i);
  return static_cast<long>(static_cast<std::size_t>(i) * axes_[0].n + coordinate_index(idx, 0));
}

bool Grid::contains(const Point& p) const noexcept {
  if (periodic()) return true;
  for (int a = 0; a < dim_; ++a) {
    if (!(p[a] >= axes_[a].lo && p[a] <= axes_[a].hi)) return false;
  }
  return true;
}

Point Grid::wrap(Point p) const noexcept {
  if (!periodic()) return p;
  for (int a = 0; a < dim_; ++a) {
    const double L = extent(a);
    double x = std::fmod(p[a] - axes_[a].lo, L);
    if (x < 0) x += L;
    p[a] = axes_[a].lo + x;
  }
  return p;
}

bool Grid::same_shape(const Grid& o) const noexcept {
  if (dim_ != o.dim_ || boundary_ != o.boundary_) return false;
  for (int a = 0; a < dim_; ++a) {
    if (axes_[a].n != o.axes_[a].n || axes_[a].lo != o.axes_[a].lo || axes_[a].hi != o.axes_[a].hi)
      return false;
  }
  return true;
}

std::string Grid::describe() const {
  std::ostringstream os;
  os << dim_ << "D " << boundary_name(boundary_);
  for (int a = 0; a < dim_; ++a)
    os << " [" << axes_[a].lo << "," << axes_[a].hi << "]x" << axes_[a].n;
  return os.str();
}

MassMatrix::MassMatrix(int dim, double inv) : dim_(dim) {
  require(dim == 1 || dim == 2, ErrorCode::invalid_argument, "mass matrix dimension must be 1 or 2");
  require(inv > 0.0 && std::isfinite(inv), ErrorCode::invalid_argument,
          "inverse mass entries must be positive");
  inv_ = {inv, inv};
}

MassMatrix::MassMatrix(std::initializer_list<double> inverse_diagonal)
    : MassMatrix(from_inverse(std::span<const double>(inverse_diagonal.begin(), inverse_diagonal.size()))) {}

MassMatrix MassMatrix::from_inverse(std::span<const double> inv) {
  require(inv.size() == 1 || inv.size() == 2, ErrorCode::invalid_argument,
          "mass matrix dimension must be 1 or 2");
  MassMatrix m(static_cast<int>(inv.size()), inv[0]);
  for (std::size_t a = 0; a < inv.size(); ++a) {
    require(inv[a] > 0.0 && std::isfinite(inv[a]), ErrorCode::invalid_argument,
            "inverse mass entries must be positive");
    m.inv_[a] = inv[a];
  }
  return m;
}

double MassMatrix::max_inverse() const noexcept {
  return dim_ == 1 ? inv_[0] : std::max(inv_[0], inv_[1]);
}

WaveField::WaveField(Grid g, ComplexField v, double t) : grid(std::move(g)), values(std::move(v)), time(t) {
  require(values.size() == grid.size(), ErrorCode::structural, "wave field size does not match grid");
  require(finite(), ErrorCode::invalid_argument, "wave field contains non-finite values");
}

double WaveField::norm() const {
  double s = 0.0;
  for (const auto& z : values) s += std::norm(z);
  return std::sqrt(s * grid.cell_volume());
}

WaveField WaveField::normalized() const {
  const double nrm = norm();
  require(nrm > 0.0, ErrorCode::contract, "cannot normalize a zero wave field");
  WaveField out = *this;
  for (auto& z : out.values) z /= nrm;
  return out;
}

RealField WaveField::density() const {
  RealField rho(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) rho[k] = std::norm(values[k]);
  return rho;
}

bool WaveField::finite() const {
  for (const auto& z : values)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

}  // namespace paleo
