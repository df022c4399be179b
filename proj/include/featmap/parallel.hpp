#pragma once

#include <functional>

namespace featmap {

/// Worker count used when a call passes 0. Reads FEATMAP_THREADS on first
/// use and falls back to the hardware concurrency.
int default_threads();
void set_default_threads(int threads);

/// Resolves 0 to default_threads(); never returns less than 1.
int resolve_threads(int threads);

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries
/// depend only on n and the thread count, so per-index results are
/// independent of scheduling.
void parallel_for(int n, int threads, const std::function<void(int, int)>& body);

}  // namespace featmap
