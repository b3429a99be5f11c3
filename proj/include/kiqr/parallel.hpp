#pragma once

#include <cstddef>
#include <functional>

namespace kiqr {

/// Worker count for parallel loops: the explicit override if set, else the
/// KIQR_THREADS environment variable (0 = auto), else hardware concurrency.
std::size_t thread_count();
/// 0 restores the environment/auto behaviour.
void set_thread_count(std::size_t threads);

/// Runs body(i) for i in [0, count). Each index runs exactly once; callers
/// write results into index-addressed slots so output never depends on the
/// number of workers.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace kiqr
