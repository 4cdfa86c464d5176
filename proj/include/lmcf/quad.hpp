#pragma once

#include <functional>

#include "lmcf/parallel.hpp"
#include "lmcf/sample.hpp"

namespace lmcf {

/// Gaussian weight exp(-|x-x0|^2 / (4 t0)), optionally normalized by the
/// backwards-heat-kernel factor 1/(4 pi t0).
struct GaussianWeight {
  Vec4 x0 = Vec4::Zero();
  double t0 = 1.0;
  bool normalized = false;

  double operator()(const Vec4& x) const {
    const double e = std::exp(-(x - x0).squaredNorm() / (4.0 * t0));
    return normalized ? e / (4.0 * kPi * t0) : e;
  }
};

/// Tail data for non-compact surfaces: area-ratio constant C1 with
/// H^2(L cap B(x,r)) <= C1 r^2, and a polynomial growth degree bound for
/// the integrand. C1 < 0 declares the surface compact (no tail).
struct TailSpec {
  double C1 = -1.0;
  int poly_degree = 0;
  bool unbounded = false;
};

struct WeightedIntegralResult {
  double value = 0.0;
  double truncation_bound = 0.0;  // upper bound on the missing tail mass
  double quad_error = 0.0;        // midpoint-rule style estimate
  double effective_radius = 0.0;  // radius actually covered by samples
};

/// Deterministic Gaussian-weighted integral sum f_i * weight(x_i) * dA_i.
/// Summation is fixed-order blocked Kahan: bit-identical across thread
/// counts. `discretization_scale` (a length h) feeds the quadrature error
/// estimate C h^2 * integral of |f| rho.
/// Errors: MissingAreaRatio when tail.unbounded and no C1 given.
WeightedIntegralResult gaussian_integral(
    const SampleList& samples, const std::function<double(const SurfaceSample&)>& f,
    const GaussianWeight& weight = {}, const TailSpec& tail = {},
    double discretization_scale = 0.0);

/// Shorthand: integral of 1 against exp(-|x|^2/4).
WeightedIntegralResult gaussian_area(const SampleList& samples,
                                     const TailSpec& tail = {},
                                     double discretization_scale = 0.0);

/// Colding-Minicozzi entropy lower bound: max over the (x0, r) grid of
/// (4 pi r)^{-1} * integral of exp(-|x-x0|^2/(4r)).
struct EntropyGrid {
  std::vector<Vec4> centers;
  std::vector<double> scales;

  /// Default probe grid: origin plus a coarse cloud around the samples,
  /// geometric scales.
  static EntropyGrid build(const SampleList& samples, int n_centers = 9,
                           int n_scales = 12, double r_min = 0.05,
                           double r_max = 50.0);
};

double entropy(const SampleList& samples, const EntropyGrid& grid);

}  // namespace lmcf
