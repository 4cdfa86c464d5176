// Timing comparison of the OpenMP kernels against their serial reference
// implementations: mesh cotan mean curvature, potential-flow step, and the
// deterministic Gaussian reduction.

#include <chrono>
#include <cstdio>

#include "lmcf/flow.hpp"
#include "lmcf/parallel.hpp"
#include "lmcf/quad.hpp"
#include "lmcf/surface.hpp"

using namespace lmcf;

namespace {
template <typename F>
double time_ms(int reps, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
             .count() /
         reps;
}
}  // namespace

int main() {
  std::printf("threads: %d\n\n", par::max_threads());

  auto mesh = icosphere(1.0, 5);  // ~10k vertices
  std::printf("cotan mean curvature (%d vertices):\n", mesh.nv());
  const double tm_par = time_ms(20, [&] { (void)mesh.mean_curvature(); });
  const double tm_ser =
      time_ms(20, [&] { (void)mesh.mean_curvature_serial(); });
  std::printf("  parallel %8.2f ms   serial %8.2f ms   speedup %.2fx\n\n",
              tm_par, tm_ser, tm_ser / tm_par);

  auto plane = standard_pair().p1;
  auto g = PotentialGraph::make(plane, 128, 0.02, [](Vec2 p) {
    return 0.05 * std::sin(3 * p[0]) * std::cos(2 * p[1]);
  });
  const double dt = 0.2 * g.h * g.h;
  std::printf("potential flow step (%d nodes):\n", g.side() * g.side());
  const double tp_par = time_ms(10, [&] { (void)step_potential(g, dt, 0.0); });
  const double tp_ser =
      time_ms(10, [&] { (void)step_potential_serial(g, dt, 0.0); });
  std::printf("  parallel %8.2f ms   serial %8.2f ms   speedup %.2fx\n\n",
              tp_par, tp_ser, tp_ser / tp_par);

  auto samples = embed(g);
  std::printf("gaussian reduction (%zu samples):\n", samples.size());
  const double tq_par = time_ms(20, [&] { (void)gaussian_area(samples); });
  // serial variant: same blocked Kahan, serial loop
  const double tq_ser = time_ms(20, [&] {
    std::vector<double> fw(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
      fw[i] = std::exp(-samples[i].x.squaredNorm() / 4.0) * samples[i].dA;
    (void)par::deterministic_sum_serial(
        static_cast<std::ptrdiff_t>(samples.size()),
        [&](std::ptrdiff_t i) { return fw[static_cast<std::size_t>(i)]; });
  });
  std::printf("  parallel %8.2f ms   serial %8.2f ms   speedup %.2fx\n",
              tq_par, tq_ser, tq_ser / tq_par);

  // parity spot-checks: the deterministic designs must agree bitwise
  auto a = mesh.mean_curvature();
  auto b = mesh.mean_curvature_serial();
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i] == b[i];
  auto ga = step_potential(g, dt, 0.0), gb = step_potential_serial(g, dt, 0.0);
  for (std::size_t i = 0; i < ga.f.size(); ++i)
    same = same && ga.f[i] == gb.f[i];
  std::printf("\nbitwise parity (parallel vs serial): %s\n",
              same ? "OK" : "MISMATCH");
  return same ? 0 : 1;
}
