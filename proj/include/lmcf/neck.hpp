#pragma once

#include "lmcf/calibrated.hpp"
#include "lmcf/plane.hpp"
#include "lmcf/sample.hpp"

namespace lmcf {

/// Complex-linear coordinates (z, w) for the hyperkaehler rotation J_thetaV
/// of a special transverse pair V = P1 u P2, with
///   z == 0 exactly on P2,   w == 0 exactly on P1,
///   |z(x)| = |x| on P1,     |w(x)| = |x| on P2.
/// The coordinate map is unitary (|x|^2 = |z|^2 + |w|^2 everywhere) exactly
/// when the planes are Hermitian-orthogonal; the defect is reported
/// otherwise. The phase of dz^dw is pinned to the rotated holomorphic
/// volume form, so zw (hence a fitted Lawlor parameter) is gauge-invariant.
struct NeckCoordinates {
  CalibratedStructure S = CalibratedStructure::standard();  // rotated(theta_V)
  double theta_V = 0.0;
  Mat4 to_zw;    // rows: Re z, Im z, Re w, Im w
  Mat4 from_zw;  // inverse

  cplx z(const Vec4& x) const {
    return {to_zw.row(0).dot(x), to_zw.row(1).dot(x)};
  }
  cplx w(const Vec4& x) const {
    return {to_zw.row(2).dot(x), to_zw.row(3).dot(x)};
  }
  cplx zw(const Vec4& x) const { return z(x) * w(x); }

  Vec4 point(cplx zv, cplx wv) const {
    return from_zw * Vec4(zv.real(), zv.imag(), wv.real(), wv.imag());
  }

  /// Push a complex tangent (dz, dw) at a point to the real tangent vector.
  Vec4 push(cplx dz, cplx dw) const {
    return from_zw * Vec4(dz.real(), dz.imag(), dw.real(), dw.imag());
  }

  /// sup_x | |x|^2 - (|z|^2+|w|^2) | / |x|^2 over the unit sphere
  /// (operator-norm computation, no sampling).
  double unitarity_defect() const;
};

/// Builds neck coordinates for a special transverse pair.
/// Errors: NotSpecial if theta1 != theta2; Degenerate if gamma_min < 1e-8.
NeckCoordinates neck_coordinates(const PlanePair& V);

/// sum_k (dz/de_k)(dw/de_k) over an orthonormal frame of the plane;
/// frame-independent. Errors: NotLagrangian.
cplx grad_z_dot_grad_w(const LagrangianPlane& plane,
                       const NeckCoordinates& nc, double tol = 1e-8);

/// The exact special Lagrangian annulus {zw = eps} asymptotic to V,
/// parameterized by z in C \ {0}; minimal, with constant angle theta_V.
struct LawlorNeck {
  NeckCoordinates nc;
  cplx eps;

  Vec4 position(cplx zv) const { return nc.point(zv, eps / zv); }

  /// Oriented orthonormal tangent frame at parameter z (the tangent plane
  /// is J-complex: frame = (v, Jv)/|v|).
  Frame42 frame(cplx zv) const;

  /// Area element factor g(z) with dA = g d(log r) d(phi).
  double area_factor(cplx zv) const;

  /// Samples on r in [r_min, r_max] (log-uniform cell midpoints, nr x nphi).
  /// theta = theta_V and H = 0 exactly (holomorphic curve).
  SampleList sample(double r_min, double r_max, int nr, int nphi) const;

  /// Distance from the surface to the origin: sqrt(2|eps|) for unitary
  /// coordinates (min of |z|^2 + |eps|^2/|z|^2 at |z| = sqrt|eps|).
  double core_radius() const { return std::sqrt(std::abs(eps)); }
};

/// Errors: ZeroEps; NotSpecial/Degenerate propagate from neck_coordinates.
LawlorNeck lawlor_neck(const PlanePair& V, cplx eps);

/// Loop integral of the Liouville form along the parameterized circle
/// |z| = r on the neck (periodic trapezoid on the analytic loop:
/// exponentially accurate). Vanishes for exact necks.
double lawlor_loop_integral(const LawlorNeck& neck, double r, int n = 512);

}  // namespace lmcf
