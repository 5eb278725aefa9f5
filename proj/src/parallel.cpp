#include "coalflow/parallel.hpp"

#include <cstdlib>
#include <string>

namespace coalflow {

namespace {
std::atomic<std::size_t> override_threads{0};
}

ThreadCountScope::ThreadCountScope(std::size_t threads) : previous_(override_threads.load()) {
  if (threads > 0) override_threads.store(threads);
}

ThreadCountScope::~ThreadCountScope() { override_threads.store(previous_); }

std::size_t default_threads() {
  if (const std::size_t n = override_threads.load(); n > 0) return n;
  if (const char* env = std::getenv("COALFLOW_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace coalflow
