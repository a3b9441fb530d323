#include "ldmatrix/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>

namespace ldmatrix {

namespace {
std::atomic<int> g_threads{1};
}  // namespace

int worker_threads() { return g_threads.load(std::memory_order_relaxed); }

void set_worker_threads(int n) {
  g_threads.store(std::max(1, n), std::memory_order_relaxed);
}

void parallel_for_index(std::size_t n,
                        const std::function<void(std::size_t)>& fn) {
  const int threads = std::min<std::size_t>(worker_threads(), n == 0 ? 1 : n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t begin = static_cast<std::size_t>(t) * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&fn, &errors, t, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace ldmatrix
