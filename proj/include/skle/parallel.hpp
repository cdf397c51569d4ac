#pragma once

#include <cstddef>
#include <functional>

namespace skle {

// Worker count: SKLE_THREADS if set, else the hardware concurrency.
unsigned worker_count();

// Runs body(i) for i in [0, n) on up to worker_count() threads. Exceptions from the
// lowest failing index are rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace skle
