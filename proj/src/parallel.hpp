#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace rodshell {

// Runs fn(i) for i in [0, n) over `threads` workers in contiguous chunks.
// Callers write into index-addressed slots, so results do not depend on the
// thread count. The first exception thrown by any worker is rethrown.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 64) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const int chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        const int lo = w * chunk, hi = std::min(n, lo + chunk);
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace rodshell
