#pragma once

#include <cstddef>
#include <functional>

namespace fadi {

// Runs fn(i) for i in [0, count) on up to `threads` workers (0 = hardware
// concurrency). Work items must write to disjoint outputs; the first exception
// thrown by any item is rethrown after all workers join.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

std::size_t resolve_threads(std::size_t threads);

}  // namespace fadi
