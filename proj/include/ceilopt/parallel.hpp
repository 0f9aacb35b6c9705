#pragma once

#include <cstddef>
#include <functional>

namespace ceilopt {

// Worker count: CEILOPT_THREADS if set, else hardware concurrency.
int thread_count();

// Runs body(i) for i in [0, n) on up to thread_count() threads. The first
// exception thrown by any task is rethrown after all tasks finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ceilopt
