#include <doctest.h>

#include <cmath>

#include "lmcf/parallel.hpp"

using namespace lmcf;

TEST_CASE("deterministic sum equals serial variant bitwise") {
  const std::ptrdiff_t n = 100000;
  auto f = [](std::ptrdiff_t i) {
    return std::sin(0.001 * static_cast<double>(i)) /
           (1.0 + static_cast<double>(i % 97));
  };
  const double a = par::deterministic_sum(n, f);
  const double b = par::deterministic_sum_serial(n, f);
  CHECK(a == b);  // bitwise
}

TEST_CASE("deterministic sum is thread-count independent") {
#ifdef _OPENMP
  auto f = [](std::ptrdiff_t i) { return 1.0 / (1.0 + static_cast<double>(i)); };
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double one = par::deterministic_sum(50001, f);
  omp_set_num_threads(saved);
  const double many = par::deterministic_sum(50001, f);
  CHECK(one == many);
#endif
}

TEST_CASE("kahan blocked sum is accurate") {
  // sum of 1e-8 a million times plus 1, vs naive float drift
  const std::ptrdiff_t n = 1000001;
  auto f = [](std::ptrdiff_t i) { return i == 0 ? 1.0 : 1e-8; };
  const double s = par::deterministic_sum(n, f);
  CHECK(s == doctest::Approx(1.0 + 1e-8 * 1000000).epsilon(1e-15));
}
