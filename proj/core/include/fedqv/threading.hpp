#pragma once

#include <cstddef>
#include <functional>

namespace fedqv {

// Worker count: `requested` > 0 wins; otherwise the FEDQV_THREADS environment
// variable; 0 (or unset) means hardware concurrency.
int resolve_thread_count(int requested = 0);

// Runs fn(0..n-1) on up to `threads` workers. Each index must write only its
// own output slot; results are then independent of scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace fedqv
