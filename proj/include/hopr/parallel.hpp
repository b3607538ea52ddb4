#pragma once

#include <thread>
#include <vector>

#include "hopr/types.hpp"

namespace hopr {

/// Runs fn(i) for i in [begin, end) on up to n_threads threads.
/// Callers guarantee disjoint writes per index; results are independent of
/// the thread count, so the iteration barrier is just the joins.
template <class F>
void parallel_for(Index begin, Index end, int n_threads, F&& fn) {
  const Index count = end - begin;
  if (count <= 0) return;
  if (n_threads <= 1 || count == 1) {
    for (Index i = begin; i < end; ++i) fn(i);
    return;
  }
  const int workers =
      static_cast<int>(std::min<Index>(n_threads, count));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const Index chunk = (count + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    const Index lo = begin + chunk * t;
    const Index hi = std::min<Index>(lo + chunk, end);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (Index i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace hopr
