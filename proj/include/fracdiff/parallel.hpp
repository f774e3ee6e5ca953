#pragma once

#include <cstddef>
#include <functional>

namespace fracdiff {

/// Worker count: FRACDIFF_NUM_THREADS if set (>= 1), otherwise the hardware
/// concurrency. Never less than one.
std::size_t num_threads();

/// Static block partition of [0, n) over num_threads() workers. Each index is
/// visited exactly once; body must only write to index-owned storage, which
/// keeps results independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fracdiff
