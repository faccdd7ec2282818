#include "mods/parallel.hpp"

#include <atomic>

namespace mods {

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int n) { g_threads.store(n < 0 ? 0 : n); }

int thread_count() {
  int n = g_threads.load();
  if (n == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    n = hw == 0 ? 1 : static_cast<int>(hw);
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t lo = n * w / workers;
    std::size_t hi = n * (w + 1) / workers;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mods
