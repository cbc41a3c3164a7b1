#pragma once

#include <cstddef>
#include <functional>

namespace biflow {

/// Fixed number of data shards. Reductions combine shard results in shard
/// order, so sums are bitwise identical for any thread count.
inline constexpr std::size_t kShardCount = 8;

/// Worker threads: BIFLOW_THREADS if set (>= 1), else hardware concurrency.
std::size_t thread_budget();

/// Calls fn(shard, begin, end) for each of kShardCount contiguous slices of
/// [0, n). Shards may run concurrently; fn must only write shard-local state.
void for_each_shard(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

/// Runs fn(i) for i in [0, n) across the thread budget. fn must write only
/// to slot i of any shared output.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace biflow
