#pragma once

#include <cstddef>
#include <functional>

namespace pcseg {

/// Upper bound on worker threads used by parallel_for. 0 means hardware
/// concurrency.
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; fn must
/// only write to slots owned by i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pcseg
