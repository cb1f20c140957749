#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace psmatch {

/// Runs fn(i) for i in [0, n) across up to n_threads workers on contiguous
/// index blocks. Callers must write results to disjoint per-index slots so
/// that the outcome is identical for any thread count.
template <typename Fn>
void parallel_for(int n, int n_threads, Fn&& fn) {
  if (n <= 0) return;
  n_threads = std::min(n_threads, n);
  if (n_threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(n_threads));
  const int block = (n + n_threads - 1) / n_threads;
  for (int t = 0; t < n_threads; ++t) {
    const int begin = t * block;
    const int end = std::min(n, begin + block);
    if (begin >= end) break;
    workers.emplace_back([begin, end, &fn] {
      for (int i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace psmatch
