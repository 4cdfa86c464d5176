#pragma once

#include "lmcf/core.hpp"

namespace lmcf {

// 2-forms on R^4 are stored as antisymmetric 4x4 matrices M with
// F(u,v) = u^T M v. Coordinates are ordered (x1, y1, x2, y2),
// z1 = x1 + i y1, z2 = x2 + i y2.

/// omega = dx1^dy1 + dx2^dy2
Mat4 omega_standard();
/// Re(dz1^dz2) = dx1^dx2 - dy1^dy2
Mat4 re_Omega_standard();
/// Im(dz1^dz2) = dx1^dy2 + dy1^dx2
Mat4 im_Omega_standard();

inline double eval_form(const Mat4& F, const Vec4& u, const Vec4& v) {
  return u.dot(F * v);
}

/// Coefficient of dx1^dy1^dx2^dy2 in F^G (both 2-forms).
double wedge_volume_coeff(const Mat4& F, const Mat4& G);

/// One flat Calabi-Yau package on R^4 = C^2: metric is Euclidean, J is the
/// compatible complex structure, omega its Kaehler form, Omega = Omega_re +
/// i*Omega_im the holomorphic volume form.
///
/// Two factories: standard() is the ambient structure (J = multiplication
/// by i, Omega = dz1^dz2) in which Lagrangian angles are measured;
/// rotated(theta) is the hyperkaehler rotation whose complex lines are
/// exactly the special Lagrangian planes of phase theta. Kaehler form of
/// the rotation: Re(e^{-i theta} Omega) = cos(theta) ReOmega +
/// sin(theta) ImOmega.
class CalibratedStructure {
 public:
  static CalibratedStructure standard();
  static CalibratedStructure rotated(double theta);

  const Mat4& J() const { return J_; }
  const Mat4& omega() const { return omega_; }
  const Mat4& Omega_re() const { return Omega_re_; }
  const Mat4& Omega_im() const { return Omega_im_; }
  double rotation_phase() const { return phase_; }
  bool is_rotated() const { return rotated_; }

  double omega_eval(const Vec4& u, const Vec4& v) const {
    return eval_form(omega_, u, v);
  }
  cplx Omega_eval(const Vec4& u, const Vec4& v) const {
    return {eval_form(Omega_re_, u, v), eval_form(Omega_im_, u, v)};
  }

  /// Max violation of the structure identities (J orthogonal, J^2=-I,
  /// omega(.,.) = <J.,.>, (1/2) omega^omega = (1/4) Omega^conj(Omega) = vol).
  double structure_defect() const;

 private:
  CalibratedStructure() = default;
  Mat4 J_, omega_, Omega_re_, Omega_im_;
  double phase_ = 0.0;
  bool rotated_ = false;
};

/// The Liouville form lambda with d(lambda) = 2*omega, as a vector field
/// pairing: lambda_x(v) = <J x, v>. On a Lagrangian through 0 its
/// restriction is d(beta) with grad(beta) = J x^perp.
inline double liouville(const CalibratedStructure& S, const Vec4& x,
                        const Vec4& v) {
  return (S.J() * x).dot(v);
}

}  // namespace lmcf
