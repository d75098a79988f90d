#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pmmap {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Calls fn(i) for i in [0, n). Work is claimed in fixed-size blocks, so any result
// written to slot i is independent of the thread count. The first exception is rethrown.
template <class Fn>
void parallel_for(std::int64_t n, int threads, Fn&& fn, std::int64_t block = 1) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n <= block) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    try {
      for (;;) {
        const std::int64_t lo = next.fetch_add(block);
        if (lo >= n) break;
        const std::int64_t hi = std::min(n, lo + block);
        for (std::int64_t i = lo; i < hi; ++i) fn(i);
      }
    } catch (...) {
      std::lock_guard lk(err_mu);
      if (!err) err = std::current_exception();
      next.store(n);
    }
  };
  std::vector<std::thread> pool;
  const auto t = static_cast<std::int64_t>(threads);
  for (std::int64_t k = 0; k < std::min(t, (n + block - 1) / block); ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace pmmap
