#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cvxspec {

/// Worker count: CVXSPEC_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
inline std::size_t thread_count() {
  if (const char* env = std::getenv("CVXSPEC_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over contiguous chunks covering [0, n). Chunks are
/// fixed by n and the worker count, and each index belongs to one chunk, so
/// callers that write per-index results get identical output for any thread
/// count. The first exception thrown by a worker is rethrown.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_chunk = 256) {
  if (n == 0) return;
  const std::size_t workers = std::min(thread_count(), std::max<std::size_t>(1, n / min_chunk));
  if (workers <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace cvxspec
