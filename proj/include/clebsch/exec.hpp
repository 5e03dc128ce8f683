#pragma once

// Execution policy shared by the data-parallel kernels. Every kernel that takes
// an Exec argument has a serial reference path and an OpenMP path producing
// bitwise-identical results (each output slot is written by exactly one
// iteration, no reductions across threads).

#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace clebsch {

enum class Exec { serial, parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs body(i) for i in [0, n). Iterations must be independent. On the
// parallel path the exception from the lowest failing index is rethrown, so
// both paths report the same error.
template <class Body>
void for_each_index(Exec exec, long n, Body&& body) {
  if (exec == Exec::serial) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first;
  long first_index = n;
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(clebsch_for_each_index)
      if (i < first_index) {
        first_index = i;
        first = std::current_exception();
      }
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace clebsch
