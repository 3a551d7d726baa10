#pragma once

#include <cstddef>
#include <functional>

namespace dislo::util {

/// Worker count for node-parallel loops. 0 selects hardware concurrency.
void set_threads(int n);
int threads();

/// Run fn(begin, end) over [0, n) split into contiguous chunks, one per
/// worker. Writes must be disjoint per index; the split is deterministic, so
/// results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace dislo::util
