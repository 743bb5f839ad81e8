#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace hdd {

inline int default_threads() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(begin, end) over contiguous blocks of [0, n). Each block is
// disjoint, so the result is identical for any thread count as long as fn
// only writes locations derived from its own range.
template <typename Fn>
void parallel_blocks(int n, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, n == 0 ? 1 : n));
  if (threads == 1 || n < 2) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    int begin = t * chunk;
    int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace hdd
