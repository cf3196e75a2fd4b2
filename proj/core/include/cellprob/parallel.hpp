#pragma once

#include <cstddef>
#include <functional>

namespace cellprob {

/// Worker count: CELLPROB_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
unsigned thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Indices are
/// handed out in contiguous blocks; callers write results by index so the
/// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cellprob
