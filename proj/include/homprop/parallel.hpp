#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace homprop {

/// Runs body(i) for i in [0, n) on up to `workers` threads. Each index is
/// handled by exactly one call, so writing into slot i of a preallocated
/// output keeps results independent of the worker count. The first exception
/// thrown by any body is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, int workers, Body &&body) {
  const std::size_t w =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t tid = 0; tid < w; ++tid) {
    pool.emplace_back([&, tid] {
      try {
        for (std::size_t i = tid; i < n; i += w)
          body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
      }
    });
  }
  for (auto &t : pool)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace homprop
