#pragma once

#include "ldpe/types.hpp"

#include <atomic>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ldpe {

/// Runs fn(i) for i in [0, count). Each index writes only its own outputs, so
/// results are identical for every thread count.
inline void parallel_for(Index count, int threads, const std::function<void(Index)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<Index>(threads, count));
  std::atomic<Index> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const Index i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Resolves a thread-count request: n ≤ 0 means auto (hardware concurrency).
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace ldpe
