#pragma once

// Slice-parallel loop. Callers write per-slice results into their own
// buffers and reduce them afterwards in index order, so results do not
// depend on the thread count.

#include <Eigen/Core>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sepdict {

inline void set_thread_count(int n) {
  // Eigen's own product threading stays off; parallelism is over slices.
  Eigen::setNbThreads(1);
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <class Fn>
void parallel_for(Eigen::Index n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n > 8)
  for (Eigen::Index i = 0; i < n; ++i) fn(i);
#else
  for (Eigen::Index i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace sepdict
