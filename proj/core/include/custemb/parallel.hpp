#pragma once

#include <cstddef>
#include <functional>

namespace custemb {

/// Runs fn(i) for i in [0, n). threads <= 1 runs inline in index order; otherwise the
/// range is split into contiguous chunks, one per worker. fn must only write state owned by i.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace custemb
