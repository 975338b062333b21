// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

namespace s2o {

/// Worker cap: S2O_THREADS if set (>=1), otherwise hardware concurrency.
std::size_t max_threads();

/// Runs fn(0..count-1), chunked over up to max_threads() std::threads.
/// Callers guarantee disjoint writes per index, so results never depend on
/// the thread count. First worker exception is rethrown after the join.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& fn);

}  // namespace s2o
