#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace coalflow {

/// Worker count: the innermost ThreadCountScope, else COALFLOW_THREADS, else
/// the hardware concurrency.
std::size_t default_threads();

/// Overrides default_threads() while alive. Zero leaves it unchanged.
class ThreadCountScope {
 public:
  explicit ThreadCountScope(std::size_t threads);
  ~ThreadCountScope();
  ThreadCountScope(const ThreadCountScope&) = delete;
  ThreadCountScope& operator=(const ThreadCountScope&) = delete;

 private:
  std::size_t previous_;
};

/// Runs fn(k) for k in [0, n) on a worker pool and returns the results in
/// slot order, so the output does not depend on the number of workers.
/// The exception of the lowest failing replicate is rethrown.
template <class T, class F>
std::vector<T> run_replicates(std::size_t n, F&& fn, std::size_t threads = default_threads()) {
  std::vector<T> out(n);
  if (n == 0) return out;
  threads = std::max<std::size_t>(1, std::min(threads, n));
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_slot = n;
  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1, std::memory_order_relaxed);
      if (k >= n) return;
      {
        std::lock_guard lock(error_mutex);
        if (error_slot < k) return;
      }
      try {
        out[k] = fn(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (k < error_slot) {
          error_slot = k;
          error = std::current_exception();
        }
      }
    }
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace coalflow
