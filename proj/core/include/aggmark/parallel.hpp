#pragma once

#include <cstddef>
#include <functional>

namespace aggmark {

/// Worker count: AGGMARK_THREADS if set to a positive integer, otherwise the
/// hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. The first
/// exception thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace aggmark
