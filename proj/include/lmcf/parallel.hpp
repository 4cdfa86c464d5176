#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lmcf::par {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Parallel loop over [0, n). Static schedule; body must be free of
/// cross-iteration writes.
template <typename Body>
void parallel_for(std::ptrdiff_t n, Body&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
#else
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
#endif
}

/// Serial reference for the same loop shape; kept for the parity tests and
/// the kernel benchmark.
template <typename Body>
void serial_for(std::ptrdiff_t n, Body&& body) {
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
}

namespace detail {
inline constexpr std::ptrdiff_t kSumBlock = 1024;

struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

template <typename F, typename Runner>
double blocked_sum(std::ptrdiff_t n, F&& f, Runner&& run) {
  if (n <= 0) return 0.0;
  const std::ptrdiff_t nb = (n + kSumBlock - 1) / kSumBlock;
  std::vector<double> block(static_cast<std::size_t>(nb), 0.0);
  run(nb, [&](std::ptrdiff_t b) {
    Kahan k;
    const std::ptrdiff_t lo = b * kSumBlock;
    const std::ptrdiff_t hi = std::min(n, lo + kSumBlock);
    for (std::ptrdiff_t i = lo; i < hi; ++i) k.add(f(i));
    block[static_cast<std::size_t>(b)] = k.sum + k.c;
  });
  Kahan total;
  for (double v : block) total.add(v);
  return total.sum + total.c;
}
}  // namespace detail

/// Deterministic sum of f(0..n-1): fixed-size blocks, Kahan within each
/// block and across blocks, block results combined in index order. The
/// block partition does not depend on the thread count, so the result is
/// bit-identical for any number of threads (and equals the serial variant).
template <typename F>
double deterministic_sum(std::ptrdiff_t n, F&& f) {
  return detail::blocked_sum(n, f, [](std::ptrdiff_t nb, auto&& body) {
    parallel_for(nb, body);
  });
}

/// Same blocked reduction run serially; bitwise-equal to deterministic_sum.
template <typename F>
double deterministic_sum_serial(std::ptrdiff_t n, F&& f) {
  return detail::blocked_sum(n, f, [](std::ptrdiff_t nb, auto&& body) {
    serial_for(nb, body);
  });
}

}  // namespace lmcf::par
