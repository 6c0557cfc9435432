#pragma once

#include <cstddef>
#include <functional>

namespace tracelab {

/// Worker count used when a caller passes 0: TRACELAB_WORKERS if set, else
/// the hardware concurrency.
unsigned default_workers();

/// Runs body(i) for i in [0, n) on up to `workers` threads. Work is handed out
/// by index, so results written to slot i are independent of scheduling. The
/// first exception thrown by any body is rethrown after all threads join.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace tracelab
