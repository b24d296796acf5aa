#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace restr {

// Worker count: RESTRICT_WORKERS env var, else hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("RESTRICT_WORKERS")) {
    int w = std::atoi(env);
    if (w >= 1) return w;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(i) for i in [0, n).  Each job must write only to its own
// output slot; with that discipline results are identical for any
// worker count or schedule.
inline void parallel_for(int n, int workers,
                         const std::function<void(int)>& body) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err = nullptr;
  std::mutex err_mu;
  auto run = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int k = std::min(workers, n);
  pool.reserve(k);
  for (int t = 0; t < k; ++t) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

inline void parallel_for(int n, const std::function<void(int)>& body) {
  parallel_for(n, worker_count(), body);
}

}  // namespace restr
