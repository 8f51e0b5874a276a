#pragma once

#include <cstddef>
#include <functional>

namespace vamct {

/// Worker count used by every parallel loop. 0 selects hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on each.
/// Every index is visited by exactly one call, so outputs written per index
/// are independent of the thread count.
void parallel_for_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

template <class F>
void parallel_for(std::size_t n, F&& fn) {
  parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

}  // namespace vamct
