#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ibridges {

/// Number of workers to use when the caller asks for 0 ("machine parallelism").
inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Evaluates f(0), ..., f(count - 1) on up to `threads` workers and returns the
/// results in index order.  Each index must derive its randomness from its own
/// stream, so the output does not depend on scheduling.  The first exception
/// thrown by any call is rethrown after all workers stop.
template <class F>
auto parallel_map(std::size_t count, unsigned threads, F&& f) -> std::vector<decltype(f(std::size_t{0}))> {
  using Result = decltype(f(std::size_t{0}));
  std::vector<Result> out(count);
  const unsigned workers = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) out[k] = f(k);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= count || failed.load()) return;
      try {
        out[k] = f(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace ibridges
