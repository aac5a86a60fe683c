#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace voxray {

// Process-wide worker cap. All kernels partition work so that every output
// element is written by exactly one task, so results are bit-identical at
// any worker count.
int max_workers();
void set_max_workers(int n);

template <class F>
void parallel_for(std::int64_t n, F&& body) {
#ifdef _OPENMP
  if (max_workers() > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(max_workers())
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace voxray
