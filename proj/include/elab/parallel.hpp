#pragma once

#include <cstddef>
#include <functional>

namespace elab {

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 means hardware concurrency).
/// Indices are split into contiguous blocks; callers write results by index so the
/// outcome never depends on the thread count. The exception of the lowest failing
/// block is rethrown after all workers join.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

unsigned resolve_threads(unsigned requested);

}  // namespace elab
