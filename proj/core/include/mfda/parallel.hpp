#pragma once

#include <cstddef>
#include <functional>

namespace mfda {

/// Worker count: MFDA_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_count();

/// Runs task(i) for i in [0, n). Tasks must write to disjoint outputs; the
/// schedule never influences results. The first exception thrown by a task
/// is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

}  // namespace mfda
