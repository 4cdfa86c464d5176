#include "lmcf/calibrated.hpp"

namespace lmcf {

namespace {
Mat4 antisym(int i0, int j0, double a, int i1, int j1, double b) {
  Mat4 m = Mat4::Zero();
  m(i0, j0) = a;
  m(j0, i0) = -a;
  m(i1, j1) = b;
  m(j1, i1) = -b;
  return m;
}
}  // namespace

// Index order (x1, y1, x2, y2) = (0, 1, 2, 3).
Mat4 omega_standard() { return antisym(0, 1, 1.0, 2, 3, 1.0); }
Mat4 re_Omega_standard() { return antisym(0, 2, 1.0, 1, 3, -1.0); }
Mat4 im_Omega_standard() { return antisym(0, 3, 1.0, 1, 2, 1.0); }

double wedge_volume_coeff(const Mat4& F, const Mat4& G) {
  // (2,2)-shuffle expansion of (F^G)(e0,e1,e2,e3).
  return F(0, 1) * G(2, 3) - F(0, 2) * G(1, 3) + F(0, 3) * G(1, 2) +
         F(2, 3) * G(0, 1) - F(1, 3) * G(0, 2) + F(1, 2) * G(0, 3);
}

CalibratedStructure CalibratedStructure::standard() {
  CalibratedStructure s;
  s.omega_ = omega_standard();
  s.Omega_re_ = re_Omega_standard();
  s.Omega_im_ = im_Omega_standard();
  s.J_ = s.omega_.transpose();  // <J u, v> = omega(u, v)
  s.phase_ = 0.0;
  s.rotated_ = false;
  return s;
}

CalibratedStructure CalibratedStructure::rotated(double theta) {
  const double c = std::cos(theta), sn = std::sin(theta);
  CalibratedStructure s;
  s.omega_ = c * re_Omega_standard() + sn * im_Omega_standard();
  // Quaternionic completion: Omega_rot = omega_mid + i*omega_std, where
  // omega_mid = -sin(theta) ReOmega + cos(theta) ImOmega.
  s.Omega_re_ = -sn * re_Omega_standard() + c * im_Omega_standard();
  s.Omega_im_ = omega_standard();
  s.J_ = s.omega_.transpose();
  s.phase_ = theta;
  s.rotated_ = true;
  return s;
}

double CalibratedStructure::structure_defect() const {
  double d = (J_.transpose() * J_ - Mat4::Identity()).cwiseAbs().maxCoeff();
  d = std::max(d, (J_ * J_ + Mat4::Identity()).cwiseAbs().maxCoeff());
  // omega(u,v) = <J u, v>  <=>  omega matrix = J^T as a bilinear form.
  d = std::max(d, (omega_ - J_.transpose()).cwiseAbs().maxCoeff());
  double vol = 0.5 * wedge_volume_coeff(omega_, omega_);
  d = std::max(d, std::abs(vol - 1.0));
  // Omega ^ conj(Omega) = (Re^Re + Im^Im) + i(Im^Re - Re^Im); the imaginary
  // part vanishes identically, the real part must equal 4*vol.
  double oo = wedge_volume_coeff(Omega_re_, Omega_re_) +
              wedge_volume_coeff(Omega_im_, Omega_im_);
  d = std::max(d, std::abs(0.25 * oo - vol));
  double oi = wedge_volume_coeff(Omega_im_, Omega_re_) -
              wedge_volume_coeff(Omega_re_, Omega_im_);
  d = std::max(d, std::abs(oi));
  return d;
}

}  // namespace lmcf
