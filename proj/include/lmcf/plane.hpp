#pragma once

#include <optional>

#include "lmcf/calibrated.hpp"
#include "lmcf/core.hpp"

namespace lmcf {

/// Oriented Lagrangian 2-plane through 0, stored as an ordered orthonormal
/// frame (columns of `frame`). Values are immutable after construction.
struct LagrangianPlane {
  Frame42 frame;

  /// Orthonormalizes (a, b) and checks the Lagrangian condition
  /// |omega(e1,e2)| <= tol against the standard structure.
  static LagrangianPlane from_vectors(const Vec4& a, const Vec4& b,
                                      double tol = 1e-10);
  /// Skips the Lagrangian check (for trusted constructions).
  static LagrangianPlane from_frame_unchecked(const Frame42& f);

  Vec4 e1() const { return frame.col(0); }
  Vec4 e2() const { return frame.col(1); }

  Vec4 project(const Vec4& x) const { return frame * (frame.transpose() * x); }
  double distance(const Vec4& x) const { return (x - project(x)).norm(); }
  bool contains(const Vec4& x, double tol = 1e-10) const {
    return distance(x) <= tol * std::max(1.0, x.norm());
  }

  LagrangianPlane flipped() const;

  double omega_defect(const CalibratedStructure& S) const {
    return std::abs(S.omega_eval(e1(), e2()));
  }
};

/// Lagrangian angle theta in (-pi, pi]: Omega(e1, e2) = e^{i theta}.
/// Throws NotLagrangian when |omega(e1,e2)| > tol.
double lagrangian_angle(const LagrangianPlane& plane,
                        const CalibratedStructure& S,
                        double tol = 1e-8);
double lagrangian_angle(const LagrangianPlane& plane);

/// Principal angles between two 2-planes, ascending (radians in [0, pi/2]).
Vec2 principal_angles(const LagrangianPlane& p, const LagrangianPlane& q);

/// Ordered pair of oriented Lagrangian planes through 0 with derived data.
struct PlanePair {
  LagrangianPlane p1, p2;
  double theta1 = 0.0, theta2 = 0.0;
  double gamma_min = 0.0;  // smallest principal angle (transversality)
  bool special = false;    // theta1 == theta2 mod 2pi within tol
  double theta_V = 0.0;    // defined when special

  static constexpr double kSpecialTol = 1e-9;

  static PlanePair make(const LagrangianPlane& a, const LagrangianPlane& b);

  bool transverse(double tol = 1e-8) const { return gamma_min > tol; }

  /// Distance from x to the union of the two planes (exact, closed form).
  double dist_point(const Vec4& x) const {
    return std::min(p1.distance(x), p2.distance(x));
  }
};

/// The standard special pair: P1 = span(dx1, dx2), P2 = span(dy2, dy1),
/// both with Lagrangian angle 0, orthogonal and transverse.
PlanePair standard_pair();

/// Hausdorff distance between V cap B1 and W cap B1 by dense angular
/// sampling of the unit circles of all four planes.
double pair_distance(const PlanePair& V, const PlanePair& W,
                     int samples_per_circle = 2048);

/// The Lagrangian plane {p + J grad(f)(p)} for the quadratic potential
/// f(p) = (1/2) p^T S p over `base` (S symmetric in the base frame).
/// Its angle is lagrangian_angle(base) + atan(l1(S)) + atan(l2(S)).
LagrangianPlane plane_graph(const LagrangianPlane& base, const Mat2& S);

/// atan(lambda1) + atan(lambda2) of a symmetric 2x2 matrix.
double angle_of_hessian(const Mat2& S);

/// Solves angle_of_hessian(S + t I) = target for t (monotone in t).
double solve_angle_shift(const Mat2& S, double target);

/// Tilts the planes of `base` by symmetric matrices S1, S2, then corrects
/// S2 by a multiple of the identity so both tilted planes share the same
/// Lagrangian angle: the 5-parameter special slice through `base`.
PlanePair make_special_pair(const PlanePair& base, const Mat2& S1,
                            const Mat2& S2);

/// The neighbourhood family "V" of pairs near a reference pair V0:
/// plane-wise angle to V0 below c1 and transversality at least c2.
/// The primed family uses c1/2.
struct VFamily {
  PlanePair V0;
  double c1 = 0.2;
  double c2 = 0.5;

  /// Largest principal angle between corresponding planes (order-sensitive).
  static double plane_angle(const LagrangianPlane& p, const LagrangianPlane& q);

  bool contains(const PlanePair& V) const;
  bool contains_primed(const PlanePair& V) const;
};

}  // namespace lmcf
