#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace mods {

/// Process-wide worker count for parallel_for. 0 means hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Runs fn(i) for i in [0, n) on a static partition of worker threads.
/// Iterations must write only to their own output slots; the partition is a
/// pure function of (n, thread_count), so results never depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mods
