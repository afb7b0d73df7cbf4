#pragma once

#include <cstdint>
#include <vector>

#include "core/grid.hpp"

namespace paleo {

enum class WalkerKind { classical, bohmian, nelsonian };
const char* walker_kind_name(WalkerKind k) noexcept;

/// Positions of a walker ensemble on a shared time axis.
/// Storage is walker-major: position(w, t) = positions[(w * times.size() + t) * dim].
struct TrajectorySet {
  WalkerKind kind = WalkerKind::classical;
  int dim = 1;
  std::vector<double> times;
  std::vector<double> positions;
  std::size_t walker_count = 0;
  std::uint64_t seed = 0;
  /// Classical paths that left a dirichlet box stop early; the rest of the
  /// row repeats the last position inside the box.
  bool truncated = false;
  long reflections = 0;

  TrajectorySet() = default;
  TrajectorySet(WalkerKind k, int d, std::vector<double> t, std::size_t walkers);

  Point position(std::size_t w, std::size_t t) const noexcept;
  void set(std::size_t w, std::size_t t, const Point& p) noexcept;
  std::size_t steps() const noexcept { return times.size(); }
  /// Throws structural if times are not increasing or a position is not finite.
  void validate() const;
};

}  // namespace paleo
