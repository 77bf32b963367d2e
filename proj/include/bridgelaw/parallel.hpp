// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bridgelaw {

/// Calls body(i) for i in [0, n) on `workers` threads. Each index is handled
/// exactly once and results must be written to per-index slots, which keeps
/// the outcome independent of the worker count. The first exception thrown by
/// any body is rethrown after all workers join.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
  constexpr std::size_t kBlock = 64;
  workers = std::max(1u, workers);
  if (workers == 1 || n <= kBlock) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    try {
      for (;;) {
        const std::size_t begin = next.fetch_add(kBlock);
        if (begin >= n) return;
        const std::size_t end = std::min(n, begin + kBlock);
        for (std::size_t i = begin; i < end; ++i) body(i);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(n);
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bridgelaw
