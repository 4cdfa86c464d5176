#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "lmcf/drift.hpp"

using namespace lmcf;

namespace {
// Independent 1D eigensolve oracle for d^2/dx^2 - (x/2) d/dx on the
// e^{-x^2/4}-weighted line: divergence-form FD, symmetrized, dense solve.
// Continuum eigenvalues: -k/2, k = 0, 1, 2, ...
std::vector<double> eigen_oracle_1d(int n = 801, double R = 12.0) {
  const double h = 2.0 * R / (n - 1);
  auto w = [&](double x) { return std::exp(-x * x / 4.0); };
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double x = -R + i * h;
    const double wp = w(x + 0.5 * h), wm = w(x - 0.5 * h), wi = w(x);
    B(i, i) = -(wp + wm) / (h * h * wi);
    if (i + 1 < n) {
      const double xj = x + h;
      // symmetrized off-diagonal: wp / (h^2 sqrt(w_i w_j))
      B(i, i + 1) = B(i + 1, i) = wp / (h * h * std::sqrt(wi * w(xj)));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  std::vector<double> ev(es.eigenvalues().data(),
                         es.eigenvalues().data() + n);
  std::sort(ev.rbegin(), ev.rend());  // descending: 0, -1/2, -1, ...
  return ev;
}

SpectralField random_field(const HermiteBasis& b, Rng& rng, int n_planes,
                           bool with_static, bool with_log) {
  auto f = SpectralField::zero(b, n_planes);
  for (int p = 0; p < n_planes; ++p) {
    if (with_log) f.a0[p] = rng.normal();
    for (std::size_t i = 0; i < b.modes.size(); ++i) {
      if (!with_static && b.modes[i].rate == 0.0) continue;
      f.coef[p][i] = rng.normal();
    }
  }
  return f;
}
}  // namespace

TEST_CASE("hermite basis structure and eigen rates") {
  auto b = HermiteBasis::make(6);
  // dx-component constant mode has rate 1/2
  bool found = false;
  for (const auto& m : b.modes)
    if (m.component == 0 && m.k1 == 0 && m.k2 == 0) {
      CHECK(m.rate == doctest::Approx(0.5));
      found = true;
    }
  CHECK(found);
  // d(x y) = y dx + x dy lives on rate-0 modes
  for (const auto& m : b.modes) {
    if ((m.component == 0 && m.k1 == 0 && m.k2 == 1) ||
        (m.component == 1 && m.k1 == 1 && m.k2 == 0))
      CHECK(m.rate == doctest::Approx(0.0));
  }
  // FD verification of (L - mu) phi = 0
  CHECK(HermiteBasis::make(12).verify() <= 1e-8);
  // the singular mode carries rate 1
  CHECK(HermiteBasis::verify_log_mode() <= 1e-8);
}

TEST_CASE("basis orthonormality in the weighted inner product") {
  auto b = HermiteBasis::make(5);
  // tensor-trapezoid quadrature of <phi_i, phi_j>_w
  const double R = 12.0;
  const int n = 400;
  const double h = 2.0 * R / (n - 1);
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto& mi =
        b.modes[static_cast<std::size_t>(rng.uniform(0, b.modes.size()))];
    const auto& mj =
        b.modes[static_cast<std::size_t>(rng.uniform(0, b.modes.size()))];
    if (mi.component != mj.component) continue;  // trivially orthogonal
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = -R + i * h;
      const double fx =
          Hermite1D::value(mi.k1, x) * Hermite1D::value(mj.k1, x) *
          std::exp(-x * x / 4.0);
      double inner = 0.0;
      for (int j = 0; j < n; ++j) {
        const double y = -R + j * h;
        inner += Hermite1D::value(mi.k2, y) * Hermite1D::value(mj.k2, y) *
                 std::exp(-y * y / 4.0) * h;
      }
      acc += fx * inner * h;
    }
    const double expect =
        (mi.k1 == mj.k1 && mi.k2 == mj.k2) ? 1.0 : 0.0;
    CHECK(acc == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("spectrum matches the 1d eigensolve oracle") {
  const auto ev = eigen_oracle_1d();
  // 1D rates: -k/2
  for (int k = 0; k <= 6; ++k)
    CHECK(ev[k] == doctest::Approx(-0.5 * k).epsilon(1e-2));
  // hence 2D 1-form rates 1/2 - (k1+k2)/2 match {1/2 - k/2}
  auto b = HermiteBasis::make(6);
  for (const auto& m : b.modes) {
    const double oracle_rate = 0.5 + ev[m.k1] + ev[m.k2];
    CHECK(m.rate == doctest::Approx(oracle_rate).epsilon(2e-2));
  }
}

TEST_CASE("log mode grows like e^s on the annulus oracle") {
  const double g1 = log_mode_growth_fd(0.5);
  CHECK(g1 == doctest::Approx(std::exp(0.5)).epsilon(1e-2));
  const double g2 = log_mode_growth_fd(1.0);
  CHECK(g2 == doctest::Approx(std::exp(1.0)).epsilon(1e-2));
}

TEST_CASE("evolve semigroup and norm identities") {
  auto b = HermiteBasis::make(8);
  Rng rng(11);
  auto z = SpectralField::zero(b, 2);
  CHECK(evolve(b, z, 1.3).norm() == 0.0);

  auto f = random_field(b, rng, 2, true, true);
  // norm(evolve(s)) equals the closed form
  for (double s : {0.3, 1.0, 2.7}) {
    CHECK(evolve(b, f, s).norm() ==
          doctest::Approx(f.norm_at(b, s)).epsilon(1e-13));
  }
  // exact semigroup
  auto a = evolve(b, evolve(b, f, 0.7), 0.9);
  auto c = evolve(b, f, 1.6);
  for (int p = 0; p < 2; ++p)
    for (std::size_t i = 0; i < a.coef[p].size(); ++i)
      CHECK(a.coef[p][i] == doctest::Approx(c.coef[p][i]).epsilon(1e-14));

  // a pure static mode is unchanged
  auto s0 = SpectralField::zero(b, 1);
  for (std::size_t i = 0; i < b.modes.size(); ++i)
    if (b.modes[i].rate == 0.0) s0.coef[0][i] = 1.0;
  auto s1 = evolve(b, s0, 5.0);
  for (std::size_t i = 0; i < b.modes.size(); ++i)
    CHECK(s1.coef[0][i] == s0.coef[0][i]);
}

TEST_CASE("spectral evolve agrees with the fd oracle") {
  auto b = HermiteBasis::make(4);
  Rng rng(7);
  auto f0 = random_field(b, rng, 1, true, false);
  // normalize for a relative comparison
  const double n0 = f0.norm();
  for (auto& c : f0.coef[0]) c /= n0;

  auto u0 = [&](Vec2 x) { return f0.eval_smooth(b, 0, x); };
  auto grid = DriftGridField::sample(u0, 12.0, 240);
  auto evolved = evolve_fd(grid, 1.0);
  auto fs = evolve(b, f0, 1.0);
  auto ref = [&](Vec2 x) { return fs.eval_smooth(b, 0, x); };
  const double diff = evolved.weighted_l2_diff(ref);
  const double norm = fs.norm();  // = weighted L2 of the smooth part
  CHECK(diff / norm <= 1e-4);
}

TEST_CASE("fd oracle: static data static, dx1 grows e^{1/2}") {
  auto b = HermiteBasis::make(2);
  // static: d(x y) = (y, x)
  auto st = DriftGridField::sample(
      [](Vec2 x) { return Vec2(x[1], x[0]); }, 12.0, 160);
  auto st1 = evolve_fd(st, 1.0);
  CHECK(st1.weighted_l2_diff(
            [](Vec2 x) { return Vec2(x[1], x[0]); }) <= 1e-6);
  // constant dx1
  auto c0 = DriftGridField::sample([](Vec2) { return Vec2(1, 0); }, 12.0, 160);
  auto c1 = evolve_fd(c0, 1.0);
  const int mid = c1.idx(80, 80);
  CHECK(c1.u[mid][0] == doctest::Approx(std::exp(0.5)).epsilon(1e-3));
  (void)b;
}

TEST_CASE("three annulus: single-mode cases") {
  auto b = HermiteBasis::make(6);
  // mu = 1/2 mode
  auto f = SpectralField::zero(b, 1);
  for (std::size_t i = 0; i < b.modes.size(); ++i)
    if (b.modes[i].rate == 0.5 && b.modes[i].component == 0 &&
        b.modes[i].k1 == 0 && b.modes[i].k2 == 0)
      f.coef[0][i] = 1.0;
  auto v = three_annulus_check(b, f);
  CHECK(v.part1_triggered);
  CHECK(v.part1_ok);
  CHECK(v.part2_applicable);
  CHECK(v.part2_ok);
  CHECK(!v.violated());

  // mu = -1/2: part 2 second alternative
  auto g = SpectralField::zero(b, 1);
  for (std::size_t i = 0; i < b.modes.size(); ++i)
    if (b.modes[i].rate == -0.5) {
      g.coef[0][i] = 1.0;
      break;
    }
  auto vg = three_annulus_check(b, g);
  CHECK(!vg.part1_triggered);
  CHECK(vg.part2_applicable);
  CHECK(vg.part2_ok);
  CHECK(vg.n1 <= std::exp(-0.039) * vg.n0);
}

TEST_CASE("three annulus: randomized suite has no violations") {
  auto b = HermiteBasis::make(6);
  Rng rng(23);
  for (int trial = 0; trial < 10000; ++trial) {
    const bool with_static = trial % 2 == 0;
    auto f = random_field(b, rng, 1, with_static, trial % 3 == 0);
    CHECK(!three_annulus_check(b, f).violated());
  }
}

TEST_CASE("three annulus: bad gap params & negative control") {
  auto b = HermiteBasis::make(6);
  auto f = SpectralField::zero(b, 1);
  ThreeAnnulusParams bad;
  bad.lambda1 = 0.3;
  bad.lambda2 = 0.301;
  bad.a = 0.3005;
  CHECK_THROWS_AS(three_annulus_check(b, f, bad), Error);

  bad.skip_gap_check = true;
  // crafted no-static counterexample: masses at rates -1/2 and +1/2
  auto g = SpectralField::zero(b, 1);
  int set = 0;
  for (std::size_t i = 0; i < b.modes.size() && set < 2; ++i) {
    if (b.modes[i].rate == -0.5 && set == 0) {
      g.coef[0][i] = std::sqrt(std::exp(1.0));  // mass e at s=1
      ++set;
    } else if (b.modes[i].rate == 0.5 && set == 1) {
      g.coef[0][i] = std::sqrt(1.6 * std::exp(-1.0));
      ++set;
    }
  }
  auto v = three_annulus_check(b, g, bad);
  CHECK(v.part2_applicable);
  CHECK(v.violated());

  // randomized negative control: sparse two-mode fields at rates -1/2 and
  // +1/2 produce violations at lambda1 = 0.3
  Rng rng(31);
  int violations = 0;
  for (int t = 0; t < 2000; ++t) {
    auto h = SpectralField::zero(b, 1);
    int want = 2;
    for (std::size_t i = 0; i < b.modes.size() && want > 0; ++i) {
      if (b.modes[i].rate == -0.5 && want == 2) {
        h.coef[0][i] = rng.normal();
        --want;
      } else if (b.modes[i].rate == 0.5 && want == 1) {
        h.coef[0][i] = rng.normal();
        --want;
      }
    }
    if (three_annulus_check(b, h, bad).violated()) ++violations;
  }
  CHECK(violations > 100);
}

TEST_CASE("split static") {
  auto b = HermiteBasis::make(4);
  const double c_id =
      std::sqrt(2.0) * Hermite1D::norm_const(1) * Hermite1D::norm_const(0);

  // f1 = |x|^2/2 on P1 (a1 = 2), f2 = 0 on P2
  auto f = SpectralField::zero(b, 2);
  for (std::size_t i = 0; i < b.modes.size(); ++i) {
    const auto& m = b.modes[i];
    if ((m.component == 0 && m.k1 == 1 && m.k2 == 0) ||
        (m.component == 1 && m.k1 == 0 && m.k2 == 1))
      f.coef[0][i] = c_id;  // x dx + y dy = d(|x|^2/2)
  }
  auto sp = split_static(b, f);
  CHECK(sp.div_u00[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sp.div_u00[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sp.div_u01[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sp.div_u01[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(sp.u_perp.norm() <= 1e-14);

  // a1 = a2: u01 vanishes
  auto g = f;
  g.coef[1] = g.coef[0];
  auto sg = split_static(b, g);
  CHECK(sg.u01.norm() <= 1e-14);

  // idempotence: split(u00) = (u00, 0, 0)
  auto s2 = split_static(b, sp.u00);
  CHECK(s2.u01.norm() <= 1e-13);
  CHECK(s2.u_perp.norm() <= 1e-13);
  for (int p = 0; p < 2; ++p)
    for (std::size_t i = 0; i < sp.u00.coef[p].size(); ++i)
      CHECK(s2.u00.coef[p][i] ==
            doctest::Approx(sp.u00.coef[p][i]).epsilon(1e-12));

  // u_perp of a generic field is orthogonal to every static mode
  Rng rng(5);
  auto h = random_field(b, rng, 2, true, true);
  auto sh = split_static(b, h);
  for (int p = 0; p < 2; ++p)
    for (std::size_t i = 0; i < b.modes.size(); ++i)
      if (b.modes[i].rate == 0.0) CHECK(sh.u_perp.coef[p][i] == 0.0);
}

TEST_CASE("fit log mode") {
  auto u1 = [](Vec2 x) { return Vec2(3.0 * x / x.squaredNorm()); };
  auto f1 = fit_log_mode(u1, 0.5, 2.0);
  CHECK(f1.a0 == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(f1.remainder(Vec2(1.3, 0.4)).norm() <= 1e-12);

  auto u2 = [](Vec2) { return Vec2(1.0, 0.0); };
  CHECK(fit_log_mode(u2, 0.5, 2.0).a0 == doctest::Approx(0.0).epsilon(1e-12));

  auto u3 = [](Vec2 x) {
    return Vec2(2.0 * x / x.squaredNorm() + Vec2(x[1], x[0]));
  };
  auto f3 = fit_log_mode(u3, 0.5, 2.0);
  CHECK(f3.a0 == doctest::Approx(2.0).epsilon(1e-8));
  const Vec2 probe(0.9, -0.6);
  CHECK((f3.remainder(probe) - Vec2(probe[1], probe[0])).norm() <= 1e-10);

  CHECK_THROWS_AS(fit_log_mode(u1, 0.5, 2.0, 4, 6), Error);
}

TEST_CASE("projection recovers coefficients") {
  auto b = HermiteBasis::make(4);
  Rng rng(17);
  auto f = random_field(b, rng, 1, true, false);
  auto proj = project_to_basis(
      b, [&](Vec2 x) { return f.eval_smooth(b, 0, x); });
  for (std::size_t i = 0; i < b.modes.size(); ++i)
    CHECK(proj.coef[0][i] == doctest::Approx(f.coef[0][i]).epsilon(1e-6));
}
