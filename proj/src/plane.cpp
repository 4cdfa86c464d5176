#include "lmcf/plane.hpp"

#include <Eigen/SVD>

namespace lmcf {

LagrangianPlane LagrangianPlane::from_vectors(const Vec4& a, const Vec4& b,
                                              double tol) {
  Vec4 e1 = a;
  if (e1.norm() < 1e-12) fail(ErrorCode::Degenerate, "zero frame vector");
  e1.normalize();
  Vec4 e2 = b - b.dot(e1) * e1;
  if (e2.norm() < 1e-12)
    fail(ErrorCode::Degenerate, "frame vectors are parallel");
  e2.normalize();
  LagrangianPlane p;
  p.frame.col(0) = e1;
  p.frame.col(1) = e2;
  if (p.omega_defect(CalibratedStructure::standard()) > tol)
    fail(ErrorCode::NotLagrangian, "plane is not Lagrangian");
  return p;
}

LagrangianPlane LagrangianPlane::from_frame_unchecked(const Frame42& f) {
  LagrangianPlane p;
  p.frame = f;
  return p;
}

LagrangianPlane LagrangianPlane::flipped() const {
  LagrangianPlane p;
  p.frame.col(0) = frame.col(1);
  p.frame.col(1) = frame.col(0);
  return p;
}

double lagrangian_angle(const LagrangianPlane& plane,
                        const CalibratedStructure& S, double tol) {
  if (plane.omega_defect(S) > tol)
    fail(ErrorCode::NotLagrangian, "lagrangian_angle: plane not Lagrangian");
  const cplx c = S.Omega_eval(plane.e1(), plane.e2());
  // |Omega(e1,e2)| = 1 characterizes Lagrangian planes; tolerate the same
  // slack as the omega check.
  if (std::abs(std::abs(c) - 1.0) > std::max(tol, 1e-10) * 100)
    fail(ErrorCode::NotLagrangian,
         "lagrangian_angle: |Omega(e1,e2)| != 1 (defect " +
             std::to_string(std::abs(std::abs(c) - 1.0)) + ")");
  return std::arg(c) == -kPi ? kPi : std::arg(c);
}

double lagrangian_angle(const LagrangianPlane& plane) {
  return lagrangian_angle(plane, CalibratedStructure::standard());
}

Vec2 principal_angles(const LagrangianPlane& p, const LagrangianPlane& q) {
  Mat2 m = p.frame.transpose() * q.frame;
  Eigen::JacobiSVD<Mat2> svd(m);
  Vec2 s = svd.singularValues();  // descending in [0,1]
  auto clamp01 = [](double v) { return std::min(1.0, std::max(-1.0, v)); };
  // acos of the larger singular value is the smaller angle.
  return {std::acos(clamp01(s[0])), std::acos(clamp01(s[1]))};
}

PlanePair PlanePair::make(const LagrangianPlane& a, const LagrangianPlane& b) {
  PlanePair V;
  V.p1 = a;
  V.p2 = b;
  V.theta1 = lagrangian_angle(a);
  V.theta2 = lagrangian_angle(b);
  V.gamma_min = principal_angles(a, b)[0];
  V.special = std::abs(angle_diff(V.theta1, V.theta2)) < kSpecialTol;
  if (V.special)
    V.theta_V = wrap_angle(V.theta1 + 0.5 * angle_diff(V.theta2, V.theta1));
  return V;
}

PlanePair standard_pair() {
  Frame42 f1, f2;
  f1.col(0) = Vec4(1, 0, 0, 0);  // dx1
  f1.col(1) = Vec4(0, 0, 1, 0);  // dx2
  f2.col(0) = Vec4(0, 0, 0, 1);  // dy2
  f2.col(1) = Vec4(0, 1, 0, 0);  // dy1
  return PlanePair::make(LagrangianPlane::from_frame_unchecked(f1),
                         LagrangianPlane::from_frame_unchecked(f2));
}

namespace {
// One-sided Hausdorff: sup over unit-circle samples of V of distance to W.
// Distances to a pair of planes are positively homogeneous, so the sup over
// V cap B1 is attained on the unit circles.
double hausdorff_one_sided(const PlanePair& V, const PlanePair& W, int n) {
  double worst = 0.0;
  for (const LagrangianPlane* p : {&V.p1, &V.p2}) {
    for (int i = 0; i < n; ++i) {
      const double phi = 2.0 * kPi * i / n;
      const Vec4 x = std::cos(phi) * p->e1() + std::sin(phi) * p->e2();
      worst = std::max(worst, W.dist_point(x));
    }
  }
  return worst;
}
}  // namespace

double pair_distance(const PlanePair& V, const PlanePair& W,
                     int samples_per_circle) {
  return std::max(hausdorff_one_sided(V, W, samples_per_circle),
                  hausdorff_one_sided(W, V, samples_per_circle));
}

LagrangianPlane plane_graph(const LagrangianPlane& base, const Mat2& S) {
  const Mat4 J = CalibratedStructure::standard().J();
  Frame42 v;
  for (int i = 0; i < 2; ++i) {
    const Vec4 grad = base.frame * S.col(i);
    v.col(i) = base.frame.col(i) + J * grad;
  }
  return LagrangianPlane::from_vectors(v.col(0), v.col(1));
}

double angle_of_hessian(const Mat2& S) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(S);
  return std::atan(es.eigenvalues()[0]) + std::atan(es.eigenvalues()[1]);
}

double solve_angle_shift(const Mat2& S, double target) {
  // angle_of_hessian(S + tI) is strictly increasing in t with range
  // (-pi, pi); bisection is plenty.
  double lo = -1e8, hi = 1e8;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (angle_of_hessian(S + mid * Mat2::Identity()) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

PlanePair make_special_pair(const PlanePair& base, const Mat2& S1,
                            const Mat2& S2) {
  const LagrangianPlane q1 = plane_graph(base.p1, S1);
  const double target =
      angle_diff(lagrangian_angle(q1), lagrangian_angle(base.p2));
  const double t = solve_angle_shift(S2, target);
  const LagrangianPlane q2 = plane_graph(base.p2, S2 + t * Mat2::Identity());
  return PlanePair::make(q1, q2);
}

double VFamily::plane_angle(const LagrangianPlane& p,
                            const LagrangianPlane& q) {
  return principal_angles(p, q)[1];
}

bool VFamily::contains(const PlanePair& V) const {
  return V.gamma_min >= c2 && plane_angle(V.p1, V0.p1) < c1 &&
         plane_angle(V.p2, V0.p2) < c1;
}

bool VFamily::contains_primed(const PlanePair& V) const {
  return V.gamma_min >= c2 && plane_angle(V.p1, V0.p1) < 0.5 * c1 &&
         plane_angle(V.p2, V0.p2) < 0.5 * c1;
}

}  // namespace lmcf
