#include <doctest.h>

#include "lmcf/flow.hpp"
#include "lmcf/quad.hpp"

using namespace lmcf;

namespace {
LagrangianPlane real_plane() {
  return LagrangianPlane::from_vectors(Vec4(1, 0, 0, 0), Vec4(0, 0, 1, 0));
}

// Independent 1D oracle for radial potentials: dg/dt = atan(g_rr) +
// atan(g_r / r) on a staggered grid r_i = (i + 1/2) h, even symmetry at 0,
// frozen outer boundary.
struct RadialOracle {
  double h;
  std::vector<double> g;
  double radius(int i) const { return (i + 0.5) * h; }
  double rhs(const std::vector<double>& v, int i) const {
    const int n = static_cast<int>(v.size());
    if (i >= n - 1) return 0.0;
    const double gm = i == 0 ? v[0] : v[i - 1];  // even ghost across r = 0
    const double gp = v[i + 1];
    const double grr = (gp - 2 * v[i] + gm) / (h * h);
    const double gr = (gp - gm) / (2 * h);
    return std::atan(grr) + std::atan(gr / radius(i));
  }
  void step(double dt) {
    const int n = static_cast<int>(g.size());
    std::vector<double> k1(n), mid(n), k2(n);
    for (int i = 0; i < n; ++i) k1[i] = rhs(g, i);
    for (int i = 0; i < n; ++i) mid[i] = g[i] + 0.5 * dt * k1[i];
    for (int i = 0; i < n; ++i) k2[i] = rhs(mid, i);
    for (int i = 0; i < n; ++i) g[i] += dt * k2[i];
  }
};
}  // namespace

TEST_CASE("static plane stays put") {
  auto g = PotentialGraph::zero(real_plane(), 12, 0.1);
  PotentialGraph cur = g;
  for (int s = 0; s < 1000; ++s) cur = step_potential(cur, 0.2 * 0.01, 0.0);
  for (std::size_t i = 0; i < cur.f.size(); ++i)
    CHECK(std::abs(cur.f[i] - g.f[i]) <= 1e-10);
}

TEST_CASE("constant hessian potential: plane static, f grows linearly") {
  Mat2 A;
  A << 0.5, 0.2, 0.2, -0.3;
  const double thA = angle_of_hessian(A);
  auto f0 = [&](Vec2 p) { return 0.5 * p.dot(A * p); };
  auto g = PotentialGraph::make(real_plane(), 10, 0.1, f0);
  BoundaryFn bd = [&](Vec2 p, double t) { return f0(p) + thA * t; };
  PotentialGraph cur = g;
  double t = 0.0;
  const double dt = 0.2 * 0.01;
  for (int s = 0; s < 200; ++s) {
    cur = step_potential(cur, dt, t, bd);
    t += dt;
  }
  for (int i = 0; i < cur.side(); ++i)
    for (int j = 0; j < cur.side(); ++j) {
      CHECK(cur.f[cur.idx(i, j)] ==
            doctest::Approx(g.f[g.idx(i, j)] + thA * t).epsilon(1e-10));
      // gradient (hence the surface) unchanged
      CHECK((cur.grad(i, j) - g.grad(i, j)).norm() <= 1e-9);
    }
}

TEST_CASE("radial potential flow matches the 1d oracle") {
  auto bump = [](double r) {
    return 0.05 * std::exp(-8.0 * (r - 1.0) * (r - 1.0));
  };
  const int n = 32;
  const double h = 2.4 / n;  // extent 2.4
  auto g = PotentialGraph::make(real_plane(), n, h,
                                [&](Vec2 p) { return bump(p.norm()); });
  RadialOracle oracle;
  oracle.h = h / 4.0;
  const int n1 = static_cast<int>(3.4 / oracle.h);
  oracle.g.resize(n1);
  for (int i = 0; i < n1; ++i) oracle.g[i] = bump(oracle.radius(i));

  const double T = 0.1;
  PotentialGraph cur = g;
  double t = 0.0;
  while (t < T - 1e-12) {
    const double dt = std::min(0.2 * h * h, T - t);
    cur = step_potential(cur, dt, t);
    t += dt;
  }
  double t1 = 0.0;
  while (t1 < T - 1e-12) {
    const double dt = std::min(0.2 * oracle.h * oracle.h, T - t1);
    oracle.step(dt);
    t1 += dt;
  }
  // weighted L2 difference over interior nodes with r <= 1.6
  double num = 0.0, den = 0.0;
  for (int i = 1; i < cur.side() - 1; ++i)
    for (int j = 1; j < cur.side() - 1; ++j) {
      const double r = cur.coords(i, j).norm();
      if (r > 1.6) continue;
      const int k = std::min(
          n1 - 2, static_cast<int>(r / oracle.h));  // nearest oracle cells
      const double w = (r - oracle.radius(k)) / oracle.h;
      const double ref =
          oracle.g[k] * (1 - w) + oracle.g[std::max(0, k + 1)] * w;
      num += std::pow(cur.f[cur.idx(i, j)] - ref, 2) * h * h;
      den += 1e-12 + ref * ref * h * h;
    }
  CHECK(std::sqrt(num) <= 1e-4);
  CHECK(den > 0);
}

TEST_CASE("flat mesh patch is static") {
  // planar grid patch, boundary fixed
  Mesh4D m;
  const int n = 8;
  auto id = [&](int i, int j) { return i * (n + 1) + j; };
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      m.vertices.push_back(Vec4(i / double(n), 0, j / double(n), 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  m.finalize();
  Mesh4D cur = m;
  const double dt = 0.2 * std::pow(m.min_edge(), 2);
  for (int s = 0; s < 50; ++s) cur = step_mesh(cur, dt);
  for (int i = 0; i < m.nv(); ++i)
    CHECK((cur.vertices[i] - m.vertices[i]).norm() <= 1e-12);
}

TEST_CASE("sphere control case: r^2 = r0^2 - 4t within 1%") {
  auto m = icosphere(1.0, 3);
  SurfaceState s = m;
  StepControl ctl;
  ctl.max_time = 0.18;  // r ~ 0.53
  ctl.checkpoint_dt = 0.02;
  RunMonitor mon;
  mon.channel_names = {"r_mean"};
  mon.channels = [](double, const SurfaceState& st) {
    const auto& mm = std::get<Mesh4D>(st);
    double r = 0.0;
    for (const auto& v : mm.vertices) r += v.norm();
    return std::vector<double>{r / mm.nv()};
  };
  auto tr = run(s, ctl, mon);
  tr.validate();
  for (auto [t, r] : tr.channel("r_mean")) {
    const double expect = std::sqrt(std::max(0.0, 1.0 - 4.0 * t));
    if (expect < 0.5) continue;
    CHECK(std::abs(r - expect) / expect <= 0.01);
  }
}

TEST_CASE("circle product: exact shrinking law and pinch time") {
  CurveProduct c{Polyline::circle(1.0, 256), Polyline::circle(1.0, 256)};
  StepControl ctl;
  ctl.max_time = 0.6;
  ctl.checkpoint_dt = 0.05;
  ctl.max_steps = 100000000;
  RunMonitor mon;
  mon.channel_names = {"r1", "r2"};
  mon.channels = [](double, const SurfaceState& st) {
    const auto& cc = std::get<CurveProduct>(st);
    auto rms = [](const Polyline& p) {
      double r = 0.0;
      for (const auto& q : p.pts) r += q.squaredNorm();
      return std::sqrt(r / p.pts.size());
    };
    return std::vector<double>{rms(cc.g1), rms(cc.g2)};
  };
  auto tr = run(c, ctl, mon);
  tr.validate();
  bool pinched = false;
  for (const auto& e : tr.events) pinched |= e.kind == "pinch-detected";
  CHECK(pinched);
  CHECK(tr.T_hat == doctest::Approx(0.5).epsilon(2e-3));
  for (auto [t, r] : tr.channel("r1")) {
    if (1.0 - 2.0 * t < 0.09) continue;  // r >= 0.3
    CHECK(std::abs(r * r - (1.0 - 2.0 * t)) / (1.0 - 2.0 * t) <= 1e-3);
  }
}

TEST_CASE("ellipse factor rounds out: isoperimetric ratio decreases to 4pi") {
  CurveProduct c{Polyline::ellipse(1.0, 0.6, 192),
                 Polyline::segment({-1, 0}, {1, 0}, 16)};
  auto iso = [](const Polyline& p) {
    // area by the shoelace formula
    double a = 0.0;
    const int n = static_cast<int>(p.pts.size());
    for (int i = 0; i < n; ++i) {
      const Vec2 &u = p.pts[i], &v = p.pts[(i + 1) % n];
      a += u[0] * v[1] - u[1] * v[0];
    }
    a = 0.5 * std::abs(a);
    return p.length() * p.length() / a;
  };
  SurfaceState s = c;
  double prev = iso(c.g1);
  CHECK(prev > 4 * kPi);
  double t = 0.0, next_mark = 0.05;
  while (t < 0.26) {
    const double dt = natural_dt(s, 0.2);
    s = step_curves(std::get<CurveProduct>(s), dt);
    t += dt;
    if (t >= next_mark) {
      const double now = iso(std::get<CurveProduct>(s).g1);
      CHECK(now < prev + 1e-9);  // monotone toward the circle
      prev = now;
      next_mark += 0.05;
    }
  }
  CHECK(prev < 4 * kPi + 0.4);
  // straight-line factor unchanged
  const auto& line = std::get<CurveProduct>(s).g2;
  for (const auto& q : line.pts) CHECK(std::abs(q[1]) <= 1e-12);
}

TEST_CASE("rescaling composes and fixes shrinkers") {
  // D_lambda . D_mu = D_{lambda mu}
  auto m = icosphere(1.0, 2, Vec4(0.3, -0.1, 0.2, 0.0));
  const Vec4 c = Vec4::Zero();
  auto a = rescale_state(rescale_state(SurfaceState(m), c, 1.7), c, 0.4);
  auto b = rescale_state(SurfaceState(m), c, 1.7 * 0.4);
  const auto &ma = std::get<Mesh4D>(a), &mb = std::get<Mesh4D>(b);
  for (int i = 0; i < ma.nv(); ++i)
    CHECK((ma.vertices[i] - mb.vertices[i]).norm() <= 1e-14);

  // static plane trace: any tau view is the same plane
  auto g = PotentialGraph::zero(real_plane(), 8, 0.1);
  StepControl ctl;
  ctl.max_time = 0.9;
  ctl.checkpoint_dt = 0.1;
  auto tr = run(SurfaceState(g), ctl);
  auto view = rescale_view(tr, Vec4::Zero(), 1.0, 1.2);
  const auto& vg = std::get<PotentialGraph>(view);
  for (double v : vg.f) CHECK(std::abs(v) <= 1e-12);

  // lawlor scaling: eps scales by lambda^2 = e^{tau}
  auto t2 = TwoChartGraph::lawlor_glued(standard_pair(), 0.04, 3.0, 24, 24,
                                        0.5, 1.5);
  auto sc = rescale_state(SurfaceState(t2), Vec4::Zero(), std::exp(0.7 / 2));
  CHECK(std::abs(std::get<TwoChartGraph>(sc).eps -
                 cplx(0.04 * std::exp(0.7))) <= 1e-12);

  // circle product centered at the pinch: rescaled radius sqrt(2)
  CurveProduct cp{Polyline::circle(1.0, 128), Polyline::circle(1.0, 128)};
  StepControl c2;
  c2.max_time = 0.6;
  c2.checkpoint_dt = 0.01;
  auto tcr = run(SurfaceState(cp), c2);
  REQUIRE(std::isfinite(tcr.T_hat));
  for (double tau : {1.0, 1.8, 2.6}) {
    auto v = rescale_view(tcr, Vec4::Zero(), tcr.T_hat, tau);
    const auto& cc = std::get<CurveProduct>(v);
    double r = 0.0;
    for (const auto& q : cc.g1.pts) r += q.norm();
    r /= cc.g1.pts.size();
    CHECK(r == doctest::Approx(std::sqrt(2.0)).epsilon(0.01));
  }

  // out of range
  CHECK_THROWS_AS(rescale_view(tcr, Vec4::Zero(), tcr.T_hat, -10.0), Error);
}

TEST_CASE("cfl guards") {
  auto g = PotentialGraph::zero(real_plane(), 6, 0.1);
  CHECK_THROWS_AS(step_potential(g, 0.6 * 0.01, 0.0), Error);
  auto m = icosphere(1.0, 1);
  CHECK_THROWS_AS(step_mesh(m, 1.0), Error);
}

TEST_CASE("potential and mesh kernels: parallel equals serial bitwise") {
  auto g = PotentialGraph::make(real_plane(), 12, 0.08, [](Vec2 p) {
    return 0.1 * std::sin(3 * p[0]) * p[1];
  });
  auto a = step_potential(g, 0.2 * 0.08 * 0.08, 0.0);
  auto b = step_potential_serial(g, 0.2 * 0.08 * 0.08, 0.0);
  for (std::size_t i = 0; i < a.f.size(); ++i) CHECK(a.f[i] == b.f[i]);

  auto m = icosphere(1.0, 2);
  auto ma = step_mesh(m, 1e-4);
  auto mb = step_mesh_serial(m, 1e-4);
  for (int i = 0; i < ma.nv(); ++i)
    CHECK(ma.vertices[i] == mb.vertices[i]);
}
