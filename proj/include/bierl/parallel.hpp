#pragma once

#include <cstddef>
#include <functional>

namespace bierl {

/// Worker count from the BIERL_WORKERS environment variable (default 1).
int default_workers();

/// Calls body(i) for i in [0, count) on up to `workers` threads. Each index
/// is visited exactly once; the first exception thrown by any body is
/// rethrown on the calling thread after all workers finish.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

}  // namespace bierl
