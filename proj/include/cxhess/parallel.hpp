#pragma once

#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cxhess {

/// Caps the number of worker threads used by pointwise grid maps.
inline void set_thread_count(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

/// Pointwise map over [0, count). Bodies must only write to their own slot.
/// An exception escaping a body is rethrown after the loop; when several
/// points throw, the one with the smallest index wins, so errors do not
/// depend on the thread count.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const auto n = static_cast<long long>(count);
  std::mutex guard;
  std::exception_ptr error;
  long long error_at = std::numeric_limits<long long>::max();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (i < error_at) {
        error_at = i;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace cxhess
