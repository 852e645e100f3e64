#pragma once

#include <cstddef>
#include <functional>

namespace normgam {

// Worker count: NORMGAM_THREADS when set, otherwise hardware concurrency.
unsigned default_thread_count();

// Runs fn(0..n-1) across the default worker count. Indices are assigned in
// contiguous blocks; exceptions propagate to the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace normgam
