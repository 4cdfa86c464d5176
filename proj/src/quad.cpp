#include "lmcf/quad.hpp"

namespace lmcf {

namespace {
double tail_bound(double R, const GaussianWeight& w, const TailSpec& tail) {
  if (tail.C1 <= 0.0) return 0.0;
  // Mass beyond radius R from x0 in unit annuli: area <= C1 (R+j+1)^2,
  // integrand <= (R+j)^degree * exp(-(R+j)^2 / (4 t0)).
  double bound = 0.0;
  for (int j = 0; j < 10000; ++j) {
    const double r = R + j;
    const double a = tail.C1 * (r + 1.0) * (r + 1.0);
    double term = a * std::pow(std::max(r, 1.0), tail.poly_degree) *
                  std::exp(-r * r / (4.0 * w.t0));
    if (w.normalized) term /= 4.0 * kPi * w.t0;
    bound += term;
    if (term < 1e-300 || term < 1e-16 * bound) break;
  }
  return bound;
}
}  // namespace

WeightedIntegralResult gaussian_integral(
    const SampleList& samples,
    const std::function<double(const SurfaceSample&)>& f,
    const GaussianWeight& weight, const TailSpec& tail,
    double discretization_scale) {
  if (tail.unbounded && tail.C1 <= 0.0)
    fail(ErrorCode::MissingAreaRatio,
         "gaussian_integral: unbounded surface without area-ratio constant");

  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(samples.size());
  std::vector<double> fw(samples.size()), absfw(samples.size()),
      rad(samples.size());
  par::parallel_for(n, [&](std::ptrdiff_t i) {
    const SurfaceSample& s = samples[static_cast<std::size_t>(i)];
    const double v = f(s) * weight(s.x) * s.dA;
    fw[static_cast<std::size_t>(i)] = v;
    absfw[static_cast<std::size_t>(i)] = std::abs(v);
    rad[static_cast<std::size_t>(i)] = (s.x - weight.x0).norm();
  });

  WeightedIntegralResult r;
  r.value = par::deterministic_sum(n, [&](std::ptrdiff_t i) {
    return fw[static_cast<std::size_t>(i)];
  });
  double abs_int = par::deterministic_sum(n, [&](std::ptrdiff_t i) {
    return absfw[static_cast<std::size_t>(i)];
  });
  r.effective_radius = 0.0;
  for (double v : rad) r.effective_radius = std::max(r.effective_radius, v);
  r.truncation_bound = tail_bound(r.effective_radius, weight, tail);
  r.quad_error = discretization_scale * discretization_scale * abs_int;
  return r;
}

WeightedIntegralResult gaussian_area(const SampleList& samples,
                                     const TailSpec& tail,
                                     double discretization_scale) {
  return gaussian_integral(
      samples, [](const SurfaceSample&) { return 1.0; }, {}, tail,
      discretization_scale);
}

EntropyGrid EntropyGrid::build(const SampleList& samples, int n_centers,
                               int n_scales, double r_min, double r_max) {
  EntropyGrid g;
  g.centers.push_back(Vec4::Zero());
  if (!samples.empty()) {
    Vec4 mean = Vec4::Zero();
    for (const auto& s : samples) mean += s.x;
    mean /= static_cast<double>(samples.size());
    g.centers.push_back(mean);
    // a few representative sample positions, deterministically strided
    const std::size_t stride =
        std::max<std::size_t>(1, samples.size() / std::max(1, n_centers - 2));
    for (std::size_t i = 0; i < samples.size() && static_cast<int>(g.centers.size()) < n_centers;
         i += stride)
      g.centers.push_back(samples[i].x);
  }
  for (int i = 0; i < n_scales; ++i) {
    const double t = n_scales == 1 ? 0.0 : static_cast<double>(i) / (n_scales - 1);
    g.scales.push_back(r_min * std::pow(r_max / r_min, t));
  }
  return g;
}

double entropy(const SampleList& samples, const EntropyGrid& grid) {
  double best = 0.0;
  for (const Vec4& x0 : grid.centers) {
    for (double r : grid.scales) {
      GaussianWeight w{x0, r, false};
      const double v =
          gaussian_integral(samples, [](const SurfaceSample&) { return 1.0; },
                            w)
              .value /
          (4.0 * kPi * r);
      best = std::max(best, v);
    }
  }
  return best;
}

}  // namespace lmcf
