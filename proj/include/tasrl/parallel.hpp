#pragma once

#include <cstddef>
#include <functional>

namespace tasrl {

/// Worker count: TASRL_THREADS if set to a positive integer, else the
/// hardware concurrency (at least 1).
int thread_count();

/// Runs body(i) for i in [0, count) on up to thread_count() threads. The
/// first exception thrown by any body is rethrown after all workers join.
/// Bodies must write only to their own slot of any shared output.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace tasrl
