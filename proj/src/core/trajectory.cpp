#include "core/trajectory.hpp"

#include <cmath>

namespace paleo {

const char* walker_kind_name(WalkerKind k) noexcept {
  switch (k) {
    case WalkerKind::classical: return "classical";
    case WalkerKind::bohmian: return "bohmian";
    case WalkerKind::nelsonian: return "nelsonian";
  }
  return "unknown";
}

TrajectorySet::TrajectorySet(WalkerKind k, int d, std::vector<double> t, std::size_t walkers)
    : kind(k), dim(d), times(std::move(t)), walker_count(walkers) {
  require(d == 1 || d == 2, ErrorCode::structural, "trajectory dimension must be 1 or 2");
  require(walkers >= 1, ErrorCode::invalid_argument, "walker_count must be >= 1");
  positions.assign(walkers * times.size() * d, 0.0);
}

Point TrajectorySet::position(std::size_t w, std::size_t t) const noexcept {
  const std::size_t o = (w * times.size() + t) * dim;
  return {positions[o], dim == 2 ? positions[o + 1] : 0.0};
}

void TrajectorySet::set(std::size_t w, std::size_t t, const Point& p) noexcept {
  const std::size_t o = (w * times.size() + t) * dim;
  positions[o] = p[0];
  if (dim == 2) positions[o + 1] = p[1];
}

void TrajectorySet::validate() const {
  for (std::size_t i = 1; i < times.size(); ++i)
    require(times[i] > times[i - 1], ErrorCode::structural, "trajectory times must increase");
  for (double x : positions) require(std::isfinite(x), ErrorCode::structural, "non-finite walker position");
}

}  // namespace paleo
