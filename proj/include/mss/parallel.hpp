#pragma once

#include <cstdint>
#include <functional>

namespace mss {

// Worker count resolution: requested >= 1 wins; otherwise the MSS_JOBS
// environment variable; otherwise 1.
int resolve_jobs(int requested);

// Runs fn(i) for i in [0, n) on `jobs` threads.  Each index is claimed
// exactly once; callers must write results into per-index slots so the
// outcome is independent of scheduling.  The first exception thrown by any
// worker is rethrown after all workers join.
void parallel_for(int jobs, std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace mss
