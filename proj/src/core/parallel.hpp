#pragma once

#include <cstddef>
#include <functional>

namespace paleo {

/// Worker count used when a caller passes 0. Defaults to the hardware count.
void set_default_threads(int n) noexcept;
int default_threads() noexcept;

/// Calls fn(i) for i in [0, count) on up to `threads` workers. Indices are
/// handed out in contiguous blocks; fn must only write to slots it owns.
/// The first exception thrown by any worker is rethrown after all join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, int threads = 0);

}  // namespace paleo
