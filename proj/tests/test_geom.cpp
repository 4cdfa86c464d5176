#include <doctest.h>

#include "lmcf/calibrated.hpp"
#include "lmcf/neck.hpp"
#include "lmcf/plane.hpp"

using namespace lmcf;

namespace {
Vec4 e(int i) {
  Vec4 v = Vec4::Zero();
  v[i] = 1.0;
  return v;
}

LagrangianPlane random_lagrangian_plane(Rng& rng) {
  const Mat4 J = CalibratedStructure::standard().J();
  const Vec4 a = rng.unit4();
  // {v : v _|_ a, v _|_ Ja} is a 2-plane; any unit vector in it completes a
  // Lagrangian frame.
  Vec4 b = rng.gaussian4();
  b -= b.dot(a) * a;
  const Vec4 ja = (J * a).normalized();
  b -= b.dot(ja) * ja;
  while (b.norm() < 1e-6) {
    b = rng.gaussian4();
    b -= b.dot(a) * a;
    b -= b.dot(ja) * ja;
  }
  return LagrangianPlane::from_vectors(a, b);
}

PlanePair random_special_pair(Rng& rng, double mag = 0.1) {
  Mat2 s1, s2;
  const double a = rng.normal(0, mag), b = rng.normal(0, mag),
               c = rng.normal(0, mag);
  s1 << a, b, b, c;
  const double d = rng.normal(0, mag), f = rng.normal(0, mag),
               g = rng.normal(0, mag);
  s2 << d, f, f, g;
  return make_special_pair(standard_pair(), s1, s2);
}
}  // namespace

TEST_CASE("calibrated structure identities") {
  CHECK(CalibratedStructure::standard().structure_defect() <= 1e-12);
  for (double th : {0.0, 0.3, kPi / 3, -1.2, kPi}) {
    CHECK(CalibratedStructure::rotated(th).structure_defect() <= 1e-12);
  }
  // phase 0 standard structure is literally omega = dx1^dy1 + dx2^dy2,
  // Omega = dz1^dz2.
  const auto S = CalibratedStructure::standard();
  CHECK(S.omega_eval(e(0), e(1)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(S.omega_eval(e(2), e(3)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(S.Omega_eval(e(0), e(2)).real() == doctest::Approx(1.0));
  CHECK(S.Omega_eval(e(0), e(3)).imag() == doctest::Approx(1.0));
}

TEST_CASE("lagrangian angle on reference frames") {
  const auto S = CalibratedStructure::standard();
  // real plane
  auto real_plane = LagrangianPlane::from_vectors(e(0), e(2));
  CHECK(lagrangian_angle(real_plane, S) == doctest::Approx(0.0).epsilon(1e-12));
  // frame (dx1, dy2): Omega evaluates to +i (symbolic oracle; see ledger)
  auto p2 = LagrangianPlane::from_vectors(e(0), e(3));
  CHECK(lagrangian_angle(p2, S) == doctest::Approx(kPi / 2));
  // rotating the real plane by phi in the (x1,y1) factor shifts theta by phi
  for (double phi : {0.1, -0.7, 1.3}) {
    auto p = LagrangianPlane::from_vectors(std::cos(phi) * e(0) + std::sin(phi) * e(1), e(2));
    CHECK(lagrangian_angle(p, S) == doctest::Approx(phi).epsilon(1e-12));
  }
  // orientation flip shifts by pi
  const double t1 = lagrangian_angle(real_plane.flipped(), S);
  CHECK(std::abs(angle_diff(t1, kPi)) <= 1e-12);
  // non-Lagrangian rejection
  CHECK_THROWS_AS(lagrangian_angle(LagrangianPlane::from_frame_unchecked(
                      [] {
                        Frame42 f;
                        f.col(0) = e(0);
                        f.col(1) = e(1);
                        return f;
                      }()),
                      S),
                  Error);
}

TEST_CASE("hyperkahler rotation angle property") {
  // theta = 0 makes the real plane complex: J0 e1 is +- the second frame
  // vector of the real plane.
  const auto S0 = CalibratedStructure::rotated(0.0);
  CHECK((S0.J() * e(0) - e(2)).norm() <= 1e-14);
  // omega_0 restricted to the standard complex lines vanishes
  CHECK(std::abs(S0.omega_eval(e(0), e(1))) <= 1e-14);
  CHECK(std::abs(S0.omega_eval(e(2), e(3))) <= 1e-14);

  // any J_theta-complex line has Lagrangian angle theta mod pi
  Rng rng(42);
  for (double th : {kPi / 3, 0.45, -2.0}) {
    const auto S = CalibratedStructure::rotated(th);
    for (int i = 0; i < 100; ++i) {
      const Vec4 v = rng.unit4();
      auto line = LagrangianPlane::from_vectors(v, S.J() * v);
      const double ang = lagrangian_angle(line);
      const double dev = std::min(std::abs(angle_diff(ang, th)),
                                  std::abs(angle_diff(ang, th + kPi)));
      CHECK(dev <= 1e-10);
    }
  }
}

TEST_CASE("graph planes and the special slice") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    Mat2 S;
    const double a = rng.normal(0, 0.4), b = rng.normal(0, 0.4),
                 c = rng.normal(0, 0.4);
    S << a, b, b, c;
    auto base = random_lagrangian_plane(rng);
    auto g = plane_graph(base, S);
    const double expect =
        wrap_angle(lagrangian_angle(base) + angle_of_hessian(S));
    CHECK(std::abs(angle_diff(lagrangian_angle(g), expect)) <= 1e-10);
  }
  for (int i = 0; i < 20; ++i) {
    auto V = random_special_pair(rng);
    CHECK(V.special);
    CHECK(V.transverse());
  }
}

TEST_CASE("plane pair data and family membership") {
  const PlanePair V0 = standard_pair();
  CHECK(V0.special);
  CHECK(V0.theta_V == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(V0.gamma_min == doctest::Approx(kPi / 2));
  VFamily fam{V0};
  CHECK(fam.contains(V0));
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    auto V = random_special_pair(rng, 0.03);
    CHECK(fam.contains(V));
  }
}

TEST_CASE("pair distance") {
  const PlanePair V = standard_pair();
  CHECK(pair_distance(V, V) == doctest::Approx(0.0).epsilon(1e-12));

  // P1 rotated by delta inside a Lagrangian family: distance ~ sin(delta)
  const double delta = 0.01;
  auto p1r = LagrangianPlane::from_vectors(
      std::cos(delta) * e(0) + std::sin(delta) * e(1), e(2));
  PlanePair W = PlanePair::make(p1r, V.p2);
  const double d = pair_distance(V, W);
  CHECK(d == doctest::Approx(std::sin(delta)).epsilon(0.05));

  // symmetry + triangle inequality on random special triples
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    auto A = random_special_pair(rng), B = random_special_pair(rng),
         C = random_special_pair(rng);
    const double ab = pair_distance(A, B, 512), ba = pair_distance(B, A, 512),
                 ac = pair_distance(A, C, 512), cb = pair_distance(C, B, 512);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab <= ac + cb + 1e-3);
  }
}

TEST_CASE("neck coordinates: standard pair") {
  const PlanePair V = standard_pair();
  const NeckCoordinates nc = neck_coordinates(V);
  CHECK(nc.unitarity_defect() <= 1e-12);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.normal(), b = rng.normal();
    const Vec4 x2 = a * V.p2.e1() + b * V.p2.e2();
    CHECK(std::abs(nc.z(x2)) <= 1e-13 * std::max(1.0, x2.norm()));
    const Vec4 x1 = a * V.p1.e1() + b * V.p1.e2();
    CHECK(std::abs(nc.w(x1)) <= 1e-13 * std::max(1.0, x1.norm()));
    CHECK(std::abs(nc.z(x1)) == doctest::Approx(x1.norm()).epsilon(1e-12));
    // unitary on an orthogonal pair
    const Vec4 x = rng.gaussian4();
    CHECK(std::norm(nc.z(x)) + std::norm(nc.w(x)) ==
          doctest::Approx(x.squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("neck coordinates: invariants on random special pairs") {
  Rng rng(17);
  for (int k = 0; k < 25; ++k) {
    const PlanePair V = random_special_pair(rng);
    const NeckCoordinates nc = neck_coordinates(V);
    for (int i = 0; i < 40; ++i) {
      const double a = rng.normal(), b = rng.normal();
      CHECK(std::abs(nc.zw(a * V.p1.e1() + b * V.p1.e2())) <= 1e-12);
      CHECK(std::abs(nc.zw(a * V.p2.e1() + b * V.p2.e2())) <= 1e-12);
      // min*max identity is exact algebra
      const Vec4 x = 3.0 * rng.gaussian4();
      const double az = std::abs(nc.z(x)), aw = std::abs(nc.w(x));
      CHECK(std::min(az, aw) * std::max(az, aw) ==
            doctest::Approx(std::abs(nc.zw(x))).epsilon(1e-14));
    }
  }
}

TEST_CASE("neck coordinates: |zw| vs |x| d_V window") {
  Rng rng(23);
  int tried = 0;
  for (int k = 0; k < 40; ++k) {
    const PlanePair V = random_special_pair(rng, 0.08);
    if (V.gamma_min < 0.5) continue;  // family constant c2 = 0.5
    const NeckCoordinates nc = neck_coordinates(V);
    for (int i = 0; i < 250; ++i) {
      const Vec4 x = rng.gaussian4() * rng.uniform(0.2, 3.0);
      const double dv = V.dist_point(x);
      if (dv * x.norm() < 1e-9) continue;
      const double ratio = std::abs(nc.zw(x)) / (x.norm() * dv);
      CHECK(ratio >= 0.2);
      CHECK(ratio <= 2.0);
      ++tried;
    }
  }
  CHECK(tried > 1000);
}

TEST_CASE("neck coordinate errors") {
  // non-special pair
  auto p1 = LagrangianPlane::from_vectors(e(0), e(2));
  auto tilted = plane_graph(
      LagrangianPlane::from_vectors(e(3), e(1)),
      (Mat2() << 0.3, 0, 0, 0).finished());
  PlanePair bad = PlanePair::make(p1, tilted);
  CHECK(!bad.special);
  CHECK_THROWS_AS(neck_coordinates(bad), Error);
}

TEST_CASE("grad z dot grad w") {
  const PlanePair V = standard_pair();
  const NeckCoordinates nc = neck_coordinates(V);
  // vanishes identically on P1 (w == 0 there)
  CHECK(std::abs(grad_z_dot_grad_w(V.p1, nc)) <= 1e-13);
  // vanishes on J_thetaV-complex lines
  Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    const Vec4 v = rng.unit4();
    auto line = LagrangianPlane::from_vectors(v, nc.S.J() * v);
    CHECK(std::abs(grad_z_dot_grad_w(line, nc)) <= 1e-12);
  }
  // frame independence
  for (int i = 0; i < 20; ++i) {
    auto p = random_lagrangian_plane(rng);
    const double a = rng.uniform(0, 2 * kPi);
    Frame42 rot;
    rot.col(0) = std::cos(a) * p.e1() + std::sin(a) * p.e2();
    rot.col(1) = -std::sin(a) * p.e1() + std::cos(a) * p.e2();
    auto q = LagrangianPlane::from_frame_unchecked(rot);
    CHECK(std::abs(grad_z_dot_grad_w(p, nc) - grad_z_dot_grad_w(q, nc)) <=
          1e-12);
  }
  // Lipschitz-type ratio |grad z . grad w| / |theta - theta_V| stays finite
  double worst = 0.0;
  int n = 0;
  while (n < 1000) {
    auto p = random_lagrangian_plane(rng);
    const double dth = std::abs(angle_diff(lagrangian_angle(p), nc.theta_V));
    const double m = std::min(dth, std::abs(dth - kPi));
    if (m > 0.3 || m < 1e-4) continue;
    worst = std::max(worst, std::abs(grad_z_dot_grad_w(p, nc)) / m);
    ++n;
  }
  CHECK(worst < 50.0);
  MESSAGE("empirical grad z.grad w Lipschitz constant: ", worst);
}

TEST_CASE("lawlor neck") {
  const PlanePair V = standard_pair();
  CHECK_THROWS_AS(lawlor_neck(V, 0.0), Error);

  const LawlorNeck N = lawlor_neck(V, 1.0);
  // the z = 1 point lies on {zw = 1} at distance sqrt(2)
  const Vec4 x0 = N.position(1.0);
  CHECK(std::abs(N.nc.zw(x0) - cplx(1.0)) <= 1e-12);
  CHECK(x0.norm() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  // closest point distance sqrt(2 |eps|)
  const LawlorNeck N3 = lawlor_neck(V, 0.3);
  double dmin = 1e300;
  for (const auto& s : N3.sample(0.05, 3.0, 120, 64))
    dmin = std::min(dmin, s.x.norm());
  CHECK(dmin == doctest::Approx(std::sqrt(2.0 * 0.3)).epsilon(1e-3));

  // samples are Lagrangian with constant angle theta_V and zw = eps
  const auto S = CalibratedStructure::standard();
  for (const auto& s : N3.sample(0.2, 3.0, 10, 12)) {
    CHECK(std::abs(S.omega_eval(s.frame.col(0), s.frame.col(1))) <= 1e-10);
    auto pl = LagrangianPlane::from_frame_unchecked(s.frame);
    CHECK(std::abs(angle_diff(lagrangian_angle(pl), V.theta_V)) <= 1e-8);
    CHECK(std::abs(N3.nc.zw(s.x) - cplx(0.3)) <= 1e-12);
  }

  // neck over a non-orthogonal random special pair still works
  Rng rng(101);
  const PlanePair W = random_special_pair(rng, 0.15);
  const LawlorNeck NW = lawlor_neck(W, cplx(0.1, 0.05));
  for (const auto& s : NW.sample(0.2, 2.0, 6, 8)) {
    CHECK(std::abs(NW.nc.zw(s.x) - cplx(0.1, 0.05)) <= 1e-12);
    CHECK(std::abs(S.omega_eval(s.frame.col(0), s.frame.col(1))) <= 1e-10);
    auto pl = LagrangianPlane::from_frame_unchecked(s.frame);
    CHECK(std::abs(angle_diff(lagrangian_angle(pl), W.theta_V)) <= 1e-8);
  }
}
