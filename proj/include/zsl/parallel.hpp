#pragma once

#include <cstddef>
#include <functional>

namespace zsl {

// Runs body(i) for i in [0, n) on up to `jobs` threads. Each index is
// handled exactly once; callers write results into per-index slots so the
// outcome does not depend on scheduling. The first exception thrown by any
// body is rethrown after all threads join.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace zsl
