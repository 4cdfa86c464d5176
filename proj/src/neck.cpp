#include "lmcf/neck.hpp"

#include <Eigen/QR>

namespace lmcf {

namespace {
// Orthonormal basis of the orthogonal complement of a plane.
Frame42 complement(const LagrangianPlane& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.col(0) = p.frame.col(0);
  m.col(1) = p.frame.col(1);
  Eigen::HouseholderQR<Eigen::Matrix4d> qr(m);
  Eigen::Matrix4d q = qr.householderQ();
  Frame42 c;
  c.col(0) = q.col(2);
  c.col(1) = q.col(3);
  return c;
}

// C-linear functional x -> <a,x> + i <Ja,x>, vanishing exactly on the
// J-complex line orthogonal to span(a, Ja).
struct CLinear {
  Vec4 re, im;
  cplx operator()(const Vec4& x) const { return {re.dot(x), im.dot(x)}; }
  void scale(cplx c) {
    // (re + i im) -> multiply the functional by c.
    Vec4 nre = c.real() * re - c.imag() * im;
    Vec4 nim = c.imag() * re + c.real() * im;
    re = nre;
    im = nim;
  }
};

CLinear vanish_on(const LagrangianPlane& dead, const Mat4& J) {
  const Frame42 comp = complement(dead);
  CLinear f;
  f.re = comp.col(0);
  f.im = J * comp.col(0);
  return f;
}

cplx form_ratio(const CLinear& z, const CLinear& w,
                const CalibratedStructure& S) {
  // dz^dw = eta * Omega_S; both are (2,0) for S.J, so the ratio is a
  // single complex number. Least-squares over basis pairs for robustness.
  cplx num = 0.0;
  double den = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      Vec4 ei = Vec4::Zero(), ej = Vec4::Zero();
      ei[i] = 1.0;
      ej[j] = 1.0;
      const cplx zw = z(ei) * w(ej) - z(ej) * w(ei);
      const cplx om = S.Omega_eval(ei, ej);
      num += zw * std::conj(om);
      den += std::norm(om);
    }
  }
  return num / den;
}
}  // namespace

double NeckCoordinates::unitarity_defect() const {
  const Mat4 g = to_zw.transpose() * to_zw;
  return (g - Mat4::Identity()).cwiseAbs().maxCoeff();
}

NeckCoordinates neck_coordinates(const PlanePair& V) {
  if (!V.special)
    fail(ErrorCode::NotSpecial,
         "neck_coordinates: pair angles differ (theta1 != theta2)");
  if (V.gamma_min < 1e-8)
    fail(ErrorCode::Degenerate, "neck_coordinates: pair is not transverse");

  NeckCoordinates nc;
  nc.theta_V = V.theta_V;
  nc.S = CalibratedStructure::rotated(V.theta_V);
  const Mat4& J = nc.S.J();

  CLinear z = vanish_on(V.p2, J);
  CLinear w = vanish_on(V.p1, J);

  // Per-plane isometric normalization: |z| = |x| on P1, |w| = |x| on P2.
  const double cz = std::abs(z(V.p1.e1()));
  const double cw = std::abs(w(V.p2.e1()));
  if (cz < 1e-12 || cw < 1e-12)
    fail(ErrorCode::Degenerate, "neck_coordinates: planes nearly coincide");
  z.scale(1.0 / cz);
  w.scale(1.0 / cw);

  // Pin arg(dz^dw) so that the graph of d(c ln r) over P1 is {zw = c} for
  // real c (the log mode carries the neck parameter); this fixes
  // dz^dw = -i * Omega_rot up to a positive factor. zw is then
  // gauge-invariant. The second step below only makes z itself
  // deterministic and leaves zw unchanged.
  cplx eta = form_ratio(z, w, nc.S) * cplx(0.0, 1.0);
  w.scale(std::conj(eta) / std::abs(eta));
  const cplx z1 = z(V.p1.e1());
  const cplx ph = std::conj(z1) / std::abs(z1);
  z.scale(ph);
  w.scale(std::conj(ph));

  nc.to_zw.row(0) = z.re.transpose();
  nc.to_zw.row(1) = z.im.transpose();
  nc.to_zw.row(2) = w.re.transpose();
  nc.to_zw.row(3) = w.im.transpose();
  nc.from_zw = nc.to_zw.inverse();
  return nc;
}

cplx grad_z_dot_grad_w(const LagrangianPlane& plane, const NeckCoordinates& nc,
                       double tol) {
  if (plane.omega_defect(CalibratedStructure::standard()) > tol)
    fail(ErrorCode::NotLagrangian, "grad_z_dot_grad_w: plane not Lagrangian");
  cplx s = 0.0;
  for (int k = 0; k < 2; ++k) {
    const Vec4 f = plane.frame.col(k);
    s += nc.z(f) * nc.w(f);
  }
  return s;
}

Frame42 LawlorNeck::frame(cplx zv) const {
  const Vec4 t = nc.push(1.0, -eps / (zv * zv));
  Frame42 f;
  f.col(0) = t.normalized();
  f.col(1) = (nc.S.J() * t).normalized();
  return f;
}

double LawlorNeck::area_factor(cplx zv) const {
  const Vec4 tr = nc.push(zv, -eps / zv);
  const Vec4 tp = nc.push(cplx(0, 1) * zv, cplx(0, -1) * eps / zv);
  const double e = tr.squaredNorm(), g = tp.squaredNorm(), f = tr.dot(tp);
  return std::sqrt(std::max(0.0, e * g - f * f));
}

SampleList LawlorNeck::sample(double r_min, double r_max, int nr,
                              int nphi) const {
  if (!(r_min > 0.0) || !(r_max > r_min) || nr < 1 || nphi < 3)
    fail(ErrorCode::DegenerateGrid, "LawlorNeck::sample: bad grid spec");
  SampleList out;
  out.reserve(static_cast<std::size_t>(nr) * nphi);
  const double dlr = (std::log(r_max) - std::log(r_min)) / nr;
  const double dphi = 2.0 * kPi / nphi;
  for (int i = 0; i < nr; ++i) {
    const double r = std::exp(std::log(r_min) + (i + 0.5) * dlr);
    for (int j = 0; j < nphi; ++j) {
      const double phi = (j + 0.5) * dphi;
      const cplx zv = std::polar(r, phi);
      SurfaceSample s;
      s.x = position(zv);
      s.frame = frame(zv);
      s.theta = nc.theta_V;
      s.H = Vec4::Zero();
      s.dA = area_factor(zv) * dlr * dphi;
      out.push_back(s);
    }
  }
  return out;
}

LawlorNeck lawlor_neck(const PlanePair& V, cplx eps) {
  if (std::abs(eps) == 0.0) fail(ErrorCode::ZeroEps, "lawlor_neck: eps = 0");
  return LawlorNeck{neck_coordinates(V), eps};
}

double lawlor_loop_integral(const LawlorNeck& neck, double r, int n) {
  const auto S = CalibratedStructure::standard();
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const double phi = 2.0 * kPi * j / n;
    const cplx zv = std::polar(r, phi);
    const Vec4 x = neck.position(zv);
    // dX/dphi = push(i z, -i eps / z)
    const Vec4 dx = neck.nc.push(cplx(0, 1) * zv,
                                 cplx(0, -1) * neck.eps / zv);
    acc += liouville(S, x, dx);
  }
  return acc * 2.0 * kPi / n;
}

}  // namespace lmcf
