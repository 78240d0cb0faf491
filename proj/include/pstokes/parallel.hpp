#pragma once

#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pstokes {

// Thread count used by all kernels. 0 = OpenMP default.
void set_threads(int n);
int thread_count();

// Parallel loop over [0, n). Bodies must write disjoint locations only;
// under that contract results do not depend on the thread count.
template <class F>
void par_for(std::int64_t n, F&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) body(i);
#else
  for (std::int64_t i = 0; i < n; ++i) body(i);
#endif
}

// Deterministic reduction: one partial sum per slab, each accumulated in
// a fixed serial order, then combined in slab order. Bit-identical for
// any thread count.
template <class F>
double det_sum(std::int64_t nslabs, F&& slab_value) {
  std::vector<double> partial(static_cast<std::size_t>(nslabs), 0.0);
  par_for(nslabs, [&](std::int64_t s) { partial[static_cast<std::size_t>(s)] = slab_value(s); });
  double total = 0.0;
  for (std::int64_t s = 0; s < nslabs; ++s) total += partial[static_cast<std::size_t>(s)];
  return total;
}

template <class F>
double det_max(std::int64_t nslabs, F&& slab_value) {
  std::vector<double> partial(static_cast<std::size_t>(nslabs), 0.0);
  par_for(nslabs, [&](std::int64_t s) { partial[static_cast<std::size_t>(s)] = slab_value(s); });
  double m = 0.0;
  for (std::int64_t s = 0; s < nslabs; ++s) m = partial[static_cast<std::size_t>(s)] > m ? partial[static_cast<std::size_t>(s)] : m;
  return m;
}

}  // namespace pstokes
