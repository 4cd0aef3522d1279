#pragma once

#include <cstddef>
#include <functional>

namespace guidance_lab {

// Worker count: GUIDANCE_LAB_THREADS when set to a positive integer, otherwise
// the hardware concurrency (at least 1).
std::size_t worker_count();

// Calls fn(i) for i in [0, n) on the worker pool. The first exception thrown
// by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace guidance_lab
