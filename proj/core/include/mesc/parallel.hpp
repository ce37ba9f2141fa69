#pragma once

#include <cstddef>
#include <functional>

namespace mesc {

// Runs fn(begin, end) over `workers` contiguous slices of [0, n). The split is
// a pure function of (n, workers), so results written to per-index slots are
// identical for any worker count. Exceptions from workers are rethrown.
void parallel_for(size_t n, size_t workers,
                  const std::function<void(size_t, size_t)>& fn);

}  // namespace mesc
