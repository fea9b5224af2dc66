#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace misgen::num {

// Worker budget: MISGEN_THREADS caps it, hardware concurrency is the default.
inline int thread_budget() {
  static const int cached = [] {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("MISGEN_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1 && v < hw) hw = v;
    }
    return hw;
  }();
  return cached;
}

// Runs fn(chunk_index, worker_index) for chunk_index in [0, n_chunks),
// worker_index in [0, thread_budget()). Each chunk must write only
// chunk-indexed state; callers reduce in chunk order afterwards, which
// keeps results identical for any thread count or schedule.
template <class F>
void parallel_chunks(int n_chunks, F&& fn) {
  int workers = std::min(thread_budget(), n_chunks);
  if (workers <= 1) {
    for (int i = 0; i < n_chunks; ++i) fn(i, 0);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (int i = next.fetch_add(1); i < n_chunks; i = next.fetch_add(1)) fn(i, t);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace misgen::num
