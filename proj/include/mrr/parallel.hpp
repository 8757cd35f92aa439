#pragma once

#include <cstddef>
#include <functional>

namespace mrr {

// Runs fn(i) for i in [0, n) across up to n_threads workers on contiguous
// index blocks. fn must not touch shared mutable state; results are written
// by index so reductions stay order-independent of the thread count.
void parallel_for(std::size_t n, int n_threads, const std::function<void(std::size_t)>& fn);

}  // namespace mrr
