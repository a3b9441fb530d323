#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace ldmatrix {

// Process-wide worker thread count used by the embarrassingly parallel loops.
// Results are byte-identical for any value: each work item writes to its own
// slot and reductions run serially in index order afterwards.
int worker_threads();
void set_worker_threads(int n);

// Runs fn(i) for i in [0, n), split into contiguous chunks over the worker
// threads.  fn must only write to per-index state.  Exceptions thrown by fn
// are captured and the first one (lowest chunk index) is rethrown.
void parallel_for_index(std::size_t n,
                        const std::function<void(std::size_t)>& fn);

}  // namespace ldmatrix
