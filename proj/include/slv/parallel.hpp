#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace slv {

// Worker cap: SEASONAL_LV_THREADS if set (>= 1), else hardware concurrency.
inline int thread_cap() {
  if (const char* env = std::getenv("SEASONAL_LV_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// Runs f(i) for i in [0, n). Results must be written per index so the
// outcome is independent of the worker count. The first exception thrown by
// any worker is rethrown here.
template <class F>
void parallel_for(int n, F&& f) {
  const int nw = std::max(1, std::min(thread_cap(), n));
  if (nw == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  std::vector<std::thread> workers;
  workers.reserve(nw);
  for (int w = 0; w < nw; ++w) {
    workers.emplace_back([&, w] {
      for (int i = w; i < n; i += nw) {
        if (failed.load(std::memory_order_relaxed)) return;
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          return;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace slv
