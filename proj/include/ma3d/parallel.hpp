#pragma once

#include <cstddef>
#include <functional>

namespace ma3d {

/// Upper bound on worker threads used by assembly and grid evaluation.
/// Zero means "not set": falls back to MA3D_THREADS, then hardware concurrency.
void set_thread_cap(int threads);
int thread_count();

/// Runs body(begin, end) over disjoint chunks of [0, n). Chunks are contiguous
/// and ordered, so per-chunk results can be merged deterministically.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

} // namespace ma3d
