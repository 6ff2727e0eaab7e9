#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace morsel {

// Applies fn(i) for i in [0, n).  workers == 0 runs the plain serial
// reference loop; workers >= 1 runs an OpenMP loop with that many threads
// (or the serial loop when OpenMP is unavailable).  Callers must write
// results to disjoint, index-addressed slots and reduce them serially, so
// output is bit-identical for every worker count.
template <class F>
void for_each_index(std::size_t n, int workers, F&& fn) {
  if (workers <= 0) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
#ifdef _OPENMP
  std::exception_ptr err;
  std::mutex err_mutex;
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mutex);
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
#else
  for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace morsel
