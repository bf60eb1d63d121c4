#pragma once

#include <cstddef>
#include <cstdint>

#include <omp.h>

namespace qam {

/// Worker count for the OpenMP kernels. Results never depend on it.
inline void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

inline int max_threads() { return omp_get_max_threads(); }

/// Static-schedule parallel loop over [0, n); each index is processed by exactly one
/// worker and must only write to storage owned by that index.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
}

}  // namespace qam
