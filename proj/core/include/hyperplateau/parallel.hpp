#pragma once

#include <cstddef>
#include <functional>

namespace hyperplateau {

// Worker count from HYPERPLATEAU_THREADS (default: hardware concurrency, at least 1).
unsigned thread_budget();

// Runs fn(i) for i in [0, n) over contiguous blocks. fn must only write to
// slots owned by its index, so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hyperplateau
