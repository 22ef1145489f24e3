#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gofkit {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Results must be
/// written to per-index slots by the caller; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(body);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace gofkit
