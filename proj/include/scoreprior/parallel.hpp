#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace scoreprior {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i, worker) for i in [0, n) on up to `threads` workers; `worker`
/// indexes [0, workers) so callers can keep per-worker scratch. Work is dealt
/// in contiguous blocks; the first exception thrown by any task is rethrown
/// in the caller after all workers join. Tasks must not touch shared mutable
/// state (results go into per-index slots).
inline void parallel_for_workers(int n, int threads, const std::function<void(int, int)>& fn) {
  threads = std::min(resolve_threads(threads), n);
  if (n <= 0) return;
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const int base = n / threads, extra = n % threads;
  int start = 0;
  for (int t = 0; t < threads; ++t) {
    const int count = base + (t < extra ? 1 : 0);
    const int begin = start, end = start + count;
    start = end;
    pool.emplace_back([&, begin, end, t] {
      try {
        for (int i = begin; i < end; ++i) fn(i, t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  parallel_for_workers(n, threads, [&](int i, int) { fn(i); });
}

}  // namespace scoreprior
