// Deterministic parallel map. Work items are indexed and results land in
// pre-assigned slots, so the output is byte-identical for any worker count.
#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace diqkd {

inline int default_worker_count() {
  if (const char* env = std::getenv("DIQKD_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n). fn must only write to per-index state.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         int workers = 0) {
  if (workers <= 0) workers = default_worker_count();
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::atomic<std::size_t> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

} // namespace diqkd
