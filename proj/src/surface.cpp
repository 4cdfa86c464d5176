#include "lmcf/surface.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

#include "lmcf/parallel.hpp"

namespace lmcf {

namespace {
const Mat4 kJ = CalibratedStructure::standard().J();

// second-order first derivative on a uniform 1D stencil with one-sided ends
double d1(const std::vector<double>& v, int i, int n, int stride, int base,
          double h) {
  auto at = [&](int k) { return v[base + k * stride]; };
  if (i > 0 && i < n - 1) return (at(i + 1) - at(i - 1)) / (2 * h);
  if (i == 0) return (-3 * at(0) + 4 * at(1) - at(2)) / (2 * h);
  return (3 * at(n - 1) - 4 * at(n - 2) + at(n - 3)) / (2 * h);
}

double d2(const std::vector<double>& v, int i, int n, int stride, int base,
          double h) {
  auto at = [&](int k) { return v[base + k * stride]; };
  if (i > 0 && i < n - 1) return (at(i + 1) - 2 * at(i) + at(i - 1)) / (h * h);
  if (i == 0) return (2 * at(0) - 5 * at(1) + 4 * at(2) - at(3)) / (h * h);
  return (2 * at(n - 1) - 5 * at(n - 2) + 4 * at(n - 3) - at(n - 4)) / (h * h);
}
}  // namespace

// ---------------------------------------------------------------------------
// PotentialGraph

PotentialGraph PotentialGraph::make(const LagrangianPlane& base, int n,
                                    double h,
                                    const std::function<double(Vec2)>& f0) {
  PotentialGraph g;
  g.base = base;
  g.n = n;
  g.h = h;
  g.f.resize(static_cast<std::size_t>(g.side()) * g.side());
  for (int i = 0; i < g.side(); ++i)
    for (int j = 0; j < g.side(); ++j) g.f[g.idx(i, j)] = f0(g.coords(i, j));
  g.validate();
  return g;
}

PotentialGraph PotentialGraph::zero(const LagrangianPlane& base, int n,
                                    double h) {
  return make(base, n, h, [](Vec2) { return 0.0; });
}

void PotentialGraph::validate() const {
  if (n < 2 || !(h > 0.0))
    fail(ErrorCode::DegenerateGrid, "PotentialGraph: need n >= 2, h > 0");
  for (double v : f)
    if (!std::isfinite(v))
      fail(ErrorCode::NonFinite, "PotentialGraph: non-finite potential");
}

Vec2 PotentialGraph::grad(int i, int j) const {
  const int s = side();
  return {d1(f, i, s, s, j, h), d1(f, j, s, 1, i * s, h)};
}

Mat2 PotentialGraph::hessian(int i, int j) const {
  const int s = side();
  Mat2 H;
  H(0, 0) = d2(f, i, s, s, j, h);
  H(1, 1) = d2(f, j, s, 1, i * s, h);
  // mixed: derivative in i of (derivative in j)
  auto fb = [&](int ii) { return d1(f, j, s, 1, ii * s, h); };
  double fab;
  if (i > 0 && i < s - 1)
    fab = (fb(i + 1) - fb(i - 1)) / (2 * h);
  else if (i == 0)
    fab = (-3 * fb(0) + 4 * fb(1) - fb(2)) / (2 * h);
  else
    fab = (3 * fb(s - 1) - 4 * fb(s - 2) + fb(s - 3)) / (2 * h);
  H(0, 1) = H(1, 0) = fab;
  return H;
}

Vec4 PotentialGraph::position(int i, int j) const {
  return base_point(i, j) + kJ * (base.frame * grad(i, j));
}

double theta_of_graph(const PotentialGraph& g, int i, int j) {
  if (!g.interior(i, j))
    fail(ErrorCode::BoundaryNode, "theta_of_graph: boundary node");
  return lagrangian_angle(g.base) + angle_of_hessian(g.hessian(i, j));
}

namespace {
// Shared sample assembly for graphs over a plane: given base tangent
// directions (a, b) of the chart cell, the Hessian, and theta data.
SurfaceSample graph_sample(const LagrangianPlane& base, const Vec4& pos,
                           const Vec4& ta, const Vec4& tb, double theta,
                           const Vec2& dtheta_chart, double weight) {
  SurfaceSample s;
  s.x = pos;
  Mat2 g;
  g(0, 0) = ta.squaredNorm();
  g(0, 1) = g(1, 0) = ta.dot(tb);
  g(1, 1) = tb.squaredNorm();
  const double det = g.determinant();
  s.dA = std::sqrt(std::max(det, 0.0)) * weight;
  // orthonormal frame
  Vec4 e1 = ta.normalized();
  Vec4 e2 = tb - tb.dot(e1) * e1;
  e2.normalize();
  s.frame.col(0) = e1;
  s.frame.col(1) = e2;
  s.theta = theta;
  // surface gradient of theta and H = J grad theta
  const Mat2 ginv = g.inverse();
  const Vec2 co = ginv * dtheta_chart;
  const Vec4 grad_theta = co[0] * ta + co[1] * tb;
  s.H = kJ * grad_theta;
  (void)base;
  return s;
}
}  // namespace

SampleList embed(const PotentialGraph& g) {
  g.validate();
  const int s = g.side();
  const double th0 = lagrangian_angle(g.base);
  std::vector<double> theta(static_cast<std::size_t>(s) * s);
  par::parallel_for(s, [&](std::ptrdiff_t i) {
    for (int j = 0; j < s; ++j)
      theta[g.idx(static_cast<int>(i), j)] =
          th0 + angle_of_hessian(g.hessian(static_cast<int>(i), j));
  });
  SampleList out(static_cast<std::size_t>(s) * s);
  par::parallel_for(s, [&](std::ptrdiff_t ii) {
    const int i = static_cast<int>(ii);
    for (int j = 0; j < s; ++j) {
      const Mat2 H = g.hessian(i, j);
      const Vec4 ua = g.base.frame.col(0), ub = g.base.frame.col(1);
      const Vec4 ta = ua + kJ * (g.base.frame * H.col(0));
      const Vec4 tb = ub + kJ * (g.base.frame * H.col(1));
      double w = g.h * g.h;
      if (i == 0 || i == s - 1) w *= 0.5;
      if (j == 0 || j == s - 1) w *= 0.5;
      const Vec2 dth(d1(theta, i, s, s, j, g.h), d1(theta, j, s, 1, i * s, g.h));
      out[g.idx(i, j)] = graph_sample(g.base, g.position(i, j), ta, tb,
                                      theta[g.idx(i, j)], dth, w);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// PolarGraph

PolarGraph PolarGraph::make(const LagrangianPlane& base, double r_in,
                            double r_out, int nr, int nphi,
                            const std::function<double(double, double)>& f0) {
  if (!(0 < r_in && r_in < r_out) || nr < 4 || nphi < 8)
    fail(ErrorCode::DegenerateGrid, "PolarGraph: bad annulus spec");
  PolarGraph g;
  g.base = base;
  g.r_in = r_in;
  g.r_out = r_out;
  g.nr = nr;
  g.nphi = nphi;
  g.f.resize(static_cast<std::size_t>(nr + 1) * nphi);
  for (int k = 0; k <= nr; ++k)
    for (int j = 0; j < nphi; ++j)
      g.f[g.idx(k, j)] = f0(g.radius(k), j * g.dphi());
  return g;
}

namespace {
// derivatives of a PolarGraph potential in (rho = log r, phi)
struct PolarDeriv {
  double fp, fq, fpp, fqq, fpq;  // p = rho, q = phi
};

PolarDeriv polar_deriv(const PolarGraph& g, int k, int j) {
  const int n = g.nr + 1;
  const double hp = g.dlr(), hq = g.dphi();
  auto at = [&](int kk, int jj) { return g.f[g.idx(kk, jj)]; };
  PolarDeriv d;
  // periodic centered in phi
  d.fq = (at(k, j + 1) - at(k, j - 1)) / (2 * hq);
  d.fqq = (at(k, j + 1) - 2 * at(k, j) + at(k, j - 1)) / (hq * hq);
  // radial: centered inside, one-sided at the ends
  if (k > 0 && k < n - 1) {
    d.fp = (at(k + 1, j) - at(k - 1, j)) / (2 * hp);
    d.fpp = (at(k + 1, j) - 2 * at(k, j) + at(k - 1, j)) / (hp * hp);
    d.fpq = ((at(k + 1, j + 1) - at(k + 1, j - 1)) -
             (at(k - 1, j + 1) - at(k - 1, j - 1))) /
            (4 * hp * hq);
  } else if (k == 0) {
    d.fp = (-3 * at(0, j) + 4 * at(1, j) - at(2, j)) / (2 * hp);
    d.fpp = (2 * at(0, j) - 5 * at(1, j) + 4 * at(2, j) - at(3, j)) / (hp * hp);
    auto fq_at = [&](int kk) {
      return (at(kk, j + 1) - at(kk, j - 1)) / (2 * hq);
    };
    d.fpq = (-3 * fq_at(0) + 4 * fq_at(1) - fq_at(2)) / (2 * hp);
  } else {
    d.fp = (3 * at(n - 1, j) - 4 * at(n - 2, j) + at(n - 3, j)) / (2 * hp);
    d.fpp = (2 * at(n - 1, j) - 5 * at(n - 2, j) + 4 * at(n - 3, j) -
             at(n - 4, j)) /
            (hp * hp);
    auto fq_at = [&](int kk) {
      return (at(kk, j + 1) - at(kk, j - 1)) / (2 * hq);
    };
    d.fpq = (3 * fq_at(n - 1) - 4 * fq_at(n - 2) + fq_at(n - 3)) / (2 * hp);
  }
  return d;
}
}  // namespace

Vec2 PolarGraph::grad(int k, int j) const {
  const auto d = polar_deriv(*this, k, j);
  const double r = radius(k);
  return {d.fp / r, d.fq / r};  // components in (e_r, e_phi-hat)
}

Mat2 PolarGraph::hessian(int k, int j) const {
  const auto d = polar_deriv(*this, k, j);
  const double r2 = radius(k) * radius(k);
  Mat2 H;
  H(0, 0) = (d.fpp - d.fp) / r2;
  H(0, 1) = H(1, 0) = (d.fpq - d.fq) / r2;
  H(1, 1) = (d.fqq + d.fp) / r2;
  return H;
}

Vec4 PolarGraph::base_point(int k, int j) const {
  const double r = radius(k), phi = j * dphi();
  return r * (std::cos(phi) * base.frame.col(0) +
              std::sin(phi) * base.frame.col(1));
}

Vec4 PolarGraph::position(int k, int j) const {
  const double phi = j * dphi();
  const Vec4 er =
      std::cos(phi) * base.frame.col(0) + std::sin(phi) * base.frame.col(1);
  const Vec4 ep =
      -std::sin(phi) * base.frame.col(0) + std::cos(phi) * base.frame.col(1);
  const Vec2 gr = grad(k, j);
  return base_point(k, j) + kJ * (gr[0] * er + gr[1] * ep);
}

SampleList embed(const PolarGraph& g) {
  const int n = g.nr + 1;
  const double th0 = lagrangian_angle(g.base);
  std::vector<double> theta(static_cast<std::size_t>(n) * g.nphi);
  par::parallel_for(n, [&](std::ptrdiff_t k) {
    for (int j = 0; j < g.nphi; ++j)
      theta[g.idx(static_cast<int>(k), j)] =
          th0 + angle_of_hessian(g.hessian(static_cast<int>(k), j));
  });
  SampleList out(static_cast<std::size_t>(n) * g.nphi);
  const double hp = g.dlr(), hq = g.dphi();
  par::parallel_for(n, [&](std::ptrdiff_t kk) {
    const int k = static_cast<int>(kk);
    for (int j = 0; j < g.nphi; ++j) {
      const double r = g.radius(k), phi = j * hq;
      const Vec4 er = std::cos(phi) * g.base.frame.col(0) +
                      std::sin(phi) * g.base.frame.col(1);
      const Vec4 ep = -std::sin(phi) * g.base.frame.col(0) +
                      std::cos(phi) * g.base.frame.col(1);
      const Mat2 H = g.hessian(k, j);
      const Vec4 trho = r * (er + kJ * (H(0, 0) * er + H(1, 0) * ep));
      const Vec4 tphi = r * (ep + kJ * (H(0, 1) * er + H(1, 1) * ep));
      double w = hp * hq;
      if (k == 0 || k == n - 1) w *= 0.5;
      // theta chart-derivatives in (rho, phi)
      double dtp;
      auto th_at = [&](int a, int b) { return theta[g.idx(a, b)]; };
      if (k > 0 && k < n - 1)
        dtp = (th_at(k + 1, j) - th_at(k - 1, j)) / (2 * hp);
      else if (k == 0)
        dtp = (-3 * th_at(0, j) + 4 * th_at(1, j) - th_at(2, j)) / (2 * hp);
      else
        dtp = (3 * th_at(n - 1, j) - 4 * th_at(n - 2, j) + th_at(n - 3, j)) /
              (2 * hp);
      const double dtq = (th_at(k, j + 1) - th_at(k, j - 1)) / (2 * hq);
      out[g.idx(k, j)] = graph_sample(g.base, g.position(k, j), trho, tphi,
                                      th_at(k, j), Vec2(dtp, dtq), w);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Polyline / CurveProduct

Polyline Polyline::circle(double radius, int n, Vec2 center) {
  Polyline p;
  p.closed = true;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * i / n;
    p.pts.push_back(center + radius * Vec2(std::cos(a), std::sin(a)));
  }
  return p;
}

Polyline Polyline::segment(Vec2 a, Vec2 b, int n) {
  Polyline p;
  p.closed = false;
  for (int i = 0; i <= n; ++i)
    p.pts.push_back(a + (b - a) * (static_cast<double>(i) / n));
  return p;
}

Polyline Polyline::ellipse(double a, double b, int n) {
  Polyline p;
  p.closed = true;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * i / n;
    p.pts.push_back({a * std::cos(t), b * std::sin(t)});
  }
  return p;
}

double Polyline::length() const {
  double l = 0.0;
  const int n = static_cast<int>(pts.size());
  const int m = closed ? n : n - 1;
  for (int i = 0; i < m; ++i) l += (pts[(i + 1) % n] - pts[i]).norm();
  return l;
}

double Polyline::min_segment() const {
  double l = 1e300;
  const int n = static_cast<int>(pts.size());
  const int m = closed ? n : n - 1;
  for (int i = 0; i < m; ++i)
    l = std::min(l, (pts[(i + 1) % n] - pts[i]).norm());
  return l;
}

Vec2 Polyline::curvature(int i) const {
  const int n = static_cast<int>(pts.size());
  if (!closed && (i == 0 || i == n - 1)) return Vec2::Zero();
  const Vec2 &p = pts[i], &pm = pts[(i - 1 + n) % n], &pp = pts[(i + 1) % n];
  const double lm = (p - pm).norm(), lp = (pp - p).norm();
  // 3-point second derivative with respect to arclength
  return 2.0 *
         (pm / (lm * (lm + lp)) - p / (lm * lp) + pp / (lp * (lm + lp)));
}

Vec2 Polyline::tangent(int i) const {
  const int n = static_cast<int>(pts.size());
  Vec2 t;
  if (closed)
    t = pts[(i + 1) % n] - pts[(i - 1 + n) % n];
  else if (i == 0)
    t = pts[1] - pts[0];
  else if (i == n - 1)
    t = pts[n - 1] - pts[n - 2];
  else
    t = pts[i + 1] - pts[i - 1];
  return t.normalized();
}

namespace {
bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  auto orient = [](Vec2 p, Vec2 q, Vec2 r) {
    const double v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
  };
  return orient(a, b, c) * orient(a, b, d) < 0 &&
         orient(c, d, a) * orient(c, d, b) < 0;
}
}  // namespace

bool Polyline::simple() const {
  const int n = static_cast<int>(pts.size());
  const int m = closed ? n : n - 1;
  for (int i = 0; i < m; ++i)
    for (int j = i + 2; j < m; ++j) {
      if (closed && i == 0 && j == m - 1) continue;
      if (segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]))
        return false;
    }
  return true;
}

SampleList embed(const CurveProduct& c) {
  const auto weights = [](const Polyline& p) {
    const int n = static_cast<int>(p.pts.size());
    std::vector<double> w(n, 0.0);
    const int m = p.closed ? n : n - 1;
    for (int i = 0; i < m; ++i) {
      const double l = (p.pts[(i + 1) % n] - p.pts[i]).norm();
      w[i] += 0.5 * l;
      w[(i + 1) % n] += 0.5 * l;
    }
    return w;
  };
  const auto w1 = weights(c.g1), w2 = weights(c.g2);
  SampleList out;
  out.reserve(c.g1.pts.size() * c.g2.pts.size());
  for (std::size_t i = 0; i < c.g1.pts.size(); ++i) {
    const Vec2 t1 = c.g1.tangent(static_cast<int>(i));
    const Vec2 k1 = c.g1.curvature(static_cast<int>(i));
    for (std::size_t j = 0; j < c.g2.pts.size(); ++j) {
      const Vec2 t2 = c.g2.tangent(static_cast<int>(j));
      const Vec2 k2 = c.g2.curvature(static_cast<int>(j));
      SurfaceSample s;
      s.x = Vec4(c.g1.pts[i][0], c.g1.pts[i][1], c.g2.pts[j][0],
                 c.g2.pts[j][1]);
      s.frame.col(0) = Vec4(t1[0], t1[1], 0, 0);
      s.frame.col(1) = Vec4(0, 0, t2[0], t2[1]);
      s.theta = wrap_angle(std::atan2(t1[1], t1[0]) + std::atan2(t2[1], t2[0]));
      s.H = Vec4(k1[0], k1[1], k2[0], k2[1]);
      s.dA = w1[i] * w2[j];
      out.push_back(s);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mesh embedding

SampleList embed(const Mesh4D& m) {
  const auto vf = vertex_faces(m);
  const auto H = m.mean_curvature();
  const auto areas = m.vertex_areas();
  const auto S = CalibratedStructure::standard();
  SampleList out(m.vertices.size());
  par::parallel_for(m.nv(), [&](std::ptrdiff_t iv) {
    const int i = static_cast<int>(iv);
    SurfaceSample s;
    s.x = m.vertices[i];
    s.dA = areas[i];
    s.H = H[i];
    // tangent plane: dominant eigenvectors of the incident-face projector
    Mat4 proj = Mat4::Zero();
    for (int fi : vf[i]) {
      const auto& f = m.faces[fi];
      Vec4 u = m.vertices[f[1]] - m.vertices[f[0]];
      Vec4 v = m.vertices[f[2]] - m.vertices[f[0]];
      u.normalize();
      v -= v.dot(u) * u;
      if (v.norm() < 1e-14) continue;
      v.normalize();
      proj += m.face_area(fi) * (u * u.transpose() + v * v.transpose());
    }
    Eigen::SelfAdjointEigenSolver<Mat4> es(proj);
    Vec4 e1 = es.eigenvectors().col(3), e2 = es.eigenvectors().col(2);
    // orient consistently with the first incident face
    if (!vf[i].empty()) {
      const auto& f = m.faces[vf[i][0]];
      const Vec4 fu = m.vertices[f[1]] - m.vertices[f[0]];
      const Vec4 fv = m.vertices[f[2]] - m.vertices[f[0]];
      const double det = (fu.dot(e1)) * (fv.dot(e2)) - (fu.dot(e2)) * (fv.dot(e1));
      if (det < 0) e2 = -e2;
    }
    s.frame.col(0) = e1;
    s.frame.col(1) = e2;
    const cplx om = S.Omega_eval(e1, e2);
    s.theta = std::abs(om) > 1e-14 ? std::arg(om) : 0.0;
    out[i] = s;
  });
  return out;
}

// ---------------------------------------------------------------------------
// TwoChartGraph

TwoChartGraph TwoChartGraph::planes_only(const PlanePair& V, double r_in,
                                         double r_out, int nr, int nphi) {
  TwoChartGraph t;
  t.V = V;
  if (V.special) t.nc = neck_coordinates(V);  // non-special pairs carry no neck
  auto zero = [](double, double) { return 0.0; };
  t.chart1 = PolarGraph::make(V.p1, r_in, r_out, nr, nphi, zero);
  t.chart2 = PolarGraph::make(V.p2, r_in, r_out, nr, nphi, zero);
  t.has_neck = false;
  return t;
}

namespace {
// C^2 cutoff: 1 for t <= 0, 0 for t >= 1 (quintic smoothstep complement).
double taper(double t) {
  if (t <= 0) return 1.0;
  if (t >= 1) return 0.0;
  return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}
}  // namespace

TwoChartGraph TwoChartGraph::lawlor_glued(
    const PlanePair& V, double eps, double r_out, int nr, int nphi, double r1,
    double r2, const std::function<double(double, double)>& bump) {
  if (!(eps > 0))
    fail(ErrorCode::ZeroEps, "lawlor_glued: eps must be positive");
  const double r_core = std::sqrt(eps);
  if (!(r_core < r1 && r1 < r2 && r2 < r_out))
    fail(ErrorCode::DegenerateGrid,
         "lawlor_glued: need sqrt(eps) < r1 < r2 < r_out");
  TwoChartGraph t;
  t.V = V;
  t.nc = neck_coordinates(V);
  t.eps = eps;
  t.has_neck = true;
  t.r_neck_out = r1;
  t.r_plane_in = r_core;

  // radial potential g with g' = taper((r-r1)/(r2-r1)) / r: equals ln r
  // inside r1, constant outside r2. Cumulative Simpson on a fine grid.
  const int nfine = 4096;
  std::vector<double> gg(nfine + 1);
  const double lr0 = std::log(r_core) - 1e-12, lr1 = std::log(r_out) + 1e-12;
  auto gp = [&](double lr) {
    const double r = std::exp(lr);
    return taper((r - r1) / (r2 - r1));  // dg/d(log r)
  };
  gg[0] = std::log(r_core);
  const double dl = (lr1 - lr0) / nfine;
  for (int i = 1; i <= nfine; ++i) {
    const double a = lr0 + (i - 1) * dl, b = lr0 + i * dl;
    gg[i] = gg[i - 1] + dl / 6.0 * (gp(a) + 4.0 * gp(0.5 * (a + b)) + gp(b));
  }
  auto g_of_r = [&](double r) {
    if (r <= r1) return std::log(r);  // exact inside the neck overlap
    const double lr = std::log(r);
    const double s = std::clamp((lr - lr0) / (lr1 - lr0), 0.0, 1.0) * nfine;
    const int i = std::min(static_cast<int>(s), nfine - 1);
    const double fr = s - i;
    return gg[i] * (1.0 - fr) + gg[i + 1] * fr;
  };
  // The normal-bundle identification gives graph_{P1}(d(c ln r)) = {zw = c}
  // but graph_{P2}(d(c ln r)) = {zw = -c}: the second chart carries the
  // opposite sign.
  auto pot1 = [&](double r, double phi) {
    double v = eps * g_of_r(r);
    if (bump) v += (1.0 - taper((r - r1) / (r2 - r1))) * bump(r, phi);
    return v;
  };
  auto pot2 = [&](double r, double phi) {
    double v = -eps * g_of_r(r);
    if (bump) v += (1.0 - taper((r - r1) / (r2 - r1))) * bump(r, phi);
    return v;
  };
  t.chart1 = PolarGraph::make(V.p1, r_core, r_out, nr, nphi, pot1);
  // Align chart2's angular origin so that on the core circle |z| = |w| =
  // sqrt(eps) the two sheets sample identical points: rotating the frame
  // of P2 shifts arg(w) on the chart nodes by +-delta.
  LagrangianPlane p2 = V.p2;
  {
    auto bp2 = [&](const LagrangianPlane& p) {
      return Vec4(r_core * p.frame.col(0));
    };
    const double dphi = 2.0 * kPi / nphi;
    const double A1 = std::arg(t.nc.z(r_core * V.p1.frame.col(0)));
    const double B = std::arg(eps / t.nc.w(bp2(p2)));
    double mis = angle_diff(B, A1);
    mis -= dphi * std::round(mis / dphi);
    // direction of arg(w) under a frame rotation
    auto rotated = [&](double d) {
      Frame42 f;
      f.col(0) = std::cos(d) * V.p2.frame.col(0) + std::sin(d) * V.p2.frame.col(1);
      f.col(1) = -std::sin(d) * V.p2.frame.col(0) + std::cos(d) * V.p2.frame.col(1);
      return LagrangianPlane::from_frame_unchecked(f);
    };
    const double probe = 1e-4;
    const double dB = angle_diff(
        std::arg(eps / t.nc.w(bp2(rotated(probe)))), B);
    const double slope = dB / probe;  // +-1
    p2 = rotated(-mis / slope);
  }
  t.chart2 = PolarGraph::make(p2, r_core, r_out, nr, nphi, pot2);
  t.neck_nr = nr;
  t.neck_nphi = nphi;
  return t;
}

double TwoChartGraph::stitching_defect() const {
  if (!has_neck) return 0.0;
  const LawlorNeck N{nc, eps};
  double worst = 0.0;
  const auto& g = chart1;
  for (int k = 0; k + 2 <= g.nr; ++k) {
    const double r = g.radius(k);
    if (g.radius(k + 2) > r_neck_out) break;
    for (int j = 0; j < g.nphi; ++j) {
      // chart-1 node at (r, phi) should equal the neck point with z matching
      // the base projection
      const Vec4 x = g.position(k, j);
      const cplx zv = nc.z(x);
      if (std::abs(zv) < 1e-12) continue;
      const Vec4 y = N.position(zv);
      worst = std::max(worst, (x - y).norm() / std::max(r, 1e-12));
    }
  }
  return worst;
}

SampleList embed(const TwoChartGraph& t) {
  SampleList out;
  if (!t.has_neck) {
    auto a = embed(t.chart1);
    auto b = embed(t.chart2);
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
  }
  // Exact partition at the chart node closest to r_neck_out: the neck chart
  // covers |z| in [eps/r_split, r_split], the plane charts cover r >=
  // r_split. The two parameterizations describe the same surface on the
  // overlap (taper == 1 below r1), so the split is exact.
  const auto& g1 = t.chart1;
  int ksplit = 0;
  while (ksplit < g1.nr && g1.radius(ksplit) < t.r_neck_out * 0.999) ++ksplit;
  const double r_split = g1.radius(ksplit);
  const double e = std::abs(t.eps);
  const LawlorNeck N{t.nc, t.eps};
  out = N.sample(e / r_split, r_split, std::max(8, 2 * t.neck_nr),
                 t.neck_nphi);
  for (const PolarGraph* g : {&t.chart1, &t.chart2}) {
    auto s = embed(*g);
    for (int k = ksplit; k <= g->nr; ++k)
      for (int j = 0; j < g->nphi; ++j) {
        SurfaceSample smp = s[g->idx(k, j)];
        if (k == ksplit && ksplit > 0) smp.dA *= 0.5;  // seam node
        out.push_back(smp);
      }
  }
  return out;
}

Mesh4D TwoChartGraph::to_mesh() const {
  Mesh4D m;
  const int np = chart1.nphi;
  const LawlorNeck N{nc, std::abs(eps)};
  const double r_core = has_neck ? std::sqrt(std::abs(eps)) : 0.0;

  auto sheet_position = [&](const PolarGraph& g, bool first, int k,
                            int j) -> Vec4 {
    const double r = g.radius(k);
    if (!has_neck || r > r_neck_out) return g.position(k, j);
    // neck parameterization through the node's own complex coordinate
    // (exact on the overlap, no angular convention involved)
    const Vec4 bp = g.base_point(k, j);
    if (first) return N.position(nc.z(bp));
    const cplx wv = nc.w(bp);
    return nc.point(eps / wv, wv);
  };

  std::vector<int> id1(static_cast<std::size_t>(chart1.nr + 1) * np, -1);
  std::vector<int> id2(static_cast<std::size_t>(chart2.nr + 1) * np, -1);
  auto add_vertex = [&](const Vec4& x) {
    m.vertices.push_back(x);
    return m.nv() - 1;
  };
  for (int k = 0; k <= chart1.nr; ++k)
    for (int j = 0; j < np; ++j)
      id1[chart1.idx(k, j)] = add_vertex(sheet_position(chart1, true, k, j));
  for (int k = 0; k <= chart2.nr; ++k)
    for (int j = 0; j < np; ++j) {
      if (has_neck && k == 0) {
        // glue: the aligned charts sample the same core vertices
        const Vec4 y = sheet_position(chart2, false, 0, j);
        int best = -1;
        double bd = 1e300;
        for (int q = 0; q < np; ++q) {
          const double d = (m.vertices[id1[chart1.idx(0, q)]] - y).norm();
          if (d < bd) {
            bd = d;
            best = q;
          }
        }
        if (bd > 1e-9 * std::max(1.0, r_core))
          fail(ErrorCode::MeshTangled,
               "to_mesh: core rings are not aligned");
        id2[chart2.idx(0, j)] = id1[chart1.idx(0, best)];
      } else {
        id2[chart2.idx(k, j)] = add_vertex(sheet_position(chart2, false, k, j));
      }
    }
  (void)r_core;
  auto quads = [&](const PolarGraph& g, const std::vector<int>& id,
                   bool flip) {
    for (int k = 0; k < g.nr; ++k)
      for (int j = 0; j < np; ++j) {
        const int a = id[g.idx(k, j)], b = id[g.idx(k + 1, j)],
                  c = id[g.idx(k + 1, j + 1)], d = id[g.idx(k, j + 1)];
        if (!flip) {
          m.faces.push_back({a, b, c});
          m.faces.push_back({a, c, d});
        } else {
          m.faces.push_back({a, c, b});
          m.faces.push_back({a, d, c});
        }
      }
  };
  quads(chart1, id1, false);
  quads(chart2, id2, false);
  m.finalize();
  return m;
}

// ---------------------------------------------------------------------------
// dispatchers

SampleList embed(const SurfaceState& s) {
  return std::visit([](const auto& v) { return embed(v); }, s);
}

double state_resolution(const SurfaceState& s) {
  struct {
    double operator()(const PotentialGraph& g) const { return g.h; }
    double operator()(const TwoChartGraph& t) const {
      return t.chart1.r_out * t.chart1.dphi();
    }
    double operator()(const Mesh4D& m) const { return m.max_edge(); }
    double operator()(const CurveProduct& c) const {
      double h = 0.0;
      for (const auto* p : {&c.g1, &c.g2})
        for (std::size_t i = 0; i + 1 < p->pts.size(); ++i)
          h = std::max(h, (p->pts[i + 1] - p->pts[i]).norm());
      return h;
    }
  } v;
  return std::visit(v, s);
}

// ---------------------------------------------------------------------------
// graphicality

std::optional<Graphicality> graphicality_detect(const SampleList& samples,
                                                const PlanePair& V,
                                                double r_in, double r_out,
                                                double c1, int nr, int nphi) {
  if (!(0 < r_in && r_in < r_out))
    fail(ErrorCode::DomainError, "graphicality_detect: bad annulus");
  Graphicality g;
  g.nr = nr;
  g.nphi = nphi;
  g.r_in = r_in;
  g.r_out = r_out;
  const double dr = (r_out - r_in) / nr, dphi = 2.0 * kPi / nphi;
  const LagrangianPlane* planes[2] = {&V.p1, &V.p2};

  struct Cell {
    Vec2 sum = Vec2::Zero();
    int count = 0;
    double lo0 = 1e300, hi0 = -1e300, lo1 = 1e300, hi1 = -1e300;
  };
  std::array<std::vector<Cell>, 2> cells;
  cells[0].resize(static_cast<std::size_t>(nr) * nphi);
  cells[1].resize(static_cast<std::size_t>(nr) * nphi);

  const Mat4 J = CalibratedStructure::standard().J();
  for (const auto& s : samples) {
    const double d0 = V.p1.distance(s.x), d1v = V.p2.distance(s.x);
    const int side = d0 <= d1v ? 0 : 1;
    const LagrangianPlane& P = *planes[side];
    const Vec4 p = P.project(s.x);
    const double r = p.norm();
    if (r < r_in || r >= r_out) continue;
    const Vec2 pc(P.e1().dot(p), P.e2().dot(p));
    const double phi = std::atan2(pc[1], pc[0]);
    const int k = std::min(nr - 1, static_cast<int>((r - r_in) / dr));
    const int j =
        ((static_cast<int>(std::floor(phi / dphi)) % nphi) + nphi) % nphi;
    const Vec4 disp = s.x - p;
    const Vec2 u((J * P.e1()).dot(disp), (J * P.e2()).dot(disp));
    Cell& c = cells[side][static_cast<std::size_t>(k) * nphi + j];
    c.sum += u;
    c.count++;
    c.lo0 = std::min(c.lo0, u[0]);
    c.hi0 = std::max(c.hi0, u[0]);
    c.lo1 = std::min(c.lo1, u[1]);
    c.hi1 = std::max(c.hi1, u[1]);
  }

  for (int side = 0; side < 2; ++side) {
    g.u[side].resize(cells[side].size());
    for (std::size_t i = 0; i < cells[side].size(); ++i) {
      const Cell& c = cells[side][i];
      if (c.count == 0) return std::nullopt;  // uncovered cell
      const double spread =
          std::max(c.hi0 - c.lo0, c.hi1 - c.lo1);
      if (spread > 0.5 * std::max(c1, 0.05)) return std::nullopt;  // sheets
      g.u[side][i] = c.sum / c.count;
      g.sup_u = std::max(g.sup_u, g.u[side][i].norm());
    }
  }
  // C^1 norm from cell-mean finite differences
  for (int side = 0; side < 2; ++side) {
    for (int k = 1; k + 1 < nr; ++k) {
      const double r = r_in + (k + 0.5) * dr;
      for (int j = 0; j < nphi; ++j) {
        auto at = [&](int kk, int jj) {
          return g.u[side][static_cast<std::size_t>(kk) * nphi +
                           (((jj % nphi) + nphi) % nphi)];
        };
        const Vec2 dur = (at(k + 1, j) - at(k - 1, j)) / (2 * dr);
        const Vec2 dup = (at(k, j + 1) - at(k, j - 1)) / (2 * dphi * r);
        const double norm = std::sqrt(dur.squaredNorm() + dup.squaredNorm());
        g.sup_grad_u = std::max(g.sup_grad_u, norm);
      }
    }
  }
  if (g.sup_u > c1 || g.sup_grad_u > c1) return std::nullopt;
  return g;
}

// ---------------------------------------------------------------------------
// refine / coarsen

PotentialGraph refine(const PotentialGraph& g) {
  PotentialGraph r;
  r.base = g.base;
  r.n = 2 * g.n;
  r.h = 0.5 * g.h;
  r.f.assign(static_cast<std::size_t>(r.side()) * r.side(), 0.0);
  for (int i = 0; i < r.side(); ++i)
    for (int j = 0; j < r.side(); ++j) {
      const int i2 = i / 2, j2 = j / 2;
      const bool ei = (i % 2) == 0, ej = (j % 2) == 0;
      double v;
      if (ei && ej)
        v = g.f[g.idx(i2, j2)];
      else if (ei)
        v = 0.5 * (g.f[g.idx(i2, j2)] + g.f[g.idx(i2, j2 + 1)]);
      else if (ej)
        v = 0.5 * (g.f[g.idx(i2, j2)] + g.f[g.idx(i2 + 1, j2)]);
      else
        v = 0.25 * (g.f[g.idx(i2, j2)] + g.f[g.idx(i2 + 1, j2)] +
                    g.f[g.idx(i2, j2 + 1)] + g.f[g.idx(i2 + 1, j2 + 1)]);
      r.f[r.idx(i, j)] = v;
    }
  return r;
}

PotentialGraph coarsen(const PotentialGraph& g) {
  if (g.n % 2 != 0)
    fail(ErrorCode::DegenerateGrid, "coarsen: odd node count");
  PotentialGraph r;
  r.base = g.base;
  r.n = g.n / 2;
  r.h = 2.0 * g.h;
  r.f.resize(static_cast<std::size_t>(r.side()) * r.side());
  for (int i = 0; i < r.side(); ++i)
    for (int j = 0; j < r.side(); ++j) r.f[r.idx(i, j)] = g.f[g.idx(2 * i, 2 * j)];
  return r;
}

CurveProduct refine(const CurveProduct& c) {
  auto half = [](const Polyline& p) {
    Polyline q;
    q.closed = p.closed;
    const int n = static_cast<int>(p.pts.size());
    const int m = p.closed ? n : n - 1;
    for (int i = 0; i < m; ++i) {
      q.pts.push_back(p.pts[i]);
      q.pts.push_back(0.5 * (p.pts[i] + p.pts[(i + 1) % n]));
    }
    if (!p.closed) q.pts.push_back(p.pts[n - 1]);
    return q;
  };
  return {half(c.g1), half(c.g2)};
}

Mesh4D refine(const Mesh4D& m) {
  Mesh4D r;
  r.vertices = m.vertices;
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto k = std::minmax(a, b);
    auto it = mid.find(k);
    if (it != mid.end()) return it->second;
    r.vertices.push_back(0.5 * (m.vertices[a] + m.vertices[b]));
    mid[k] = static_cast<int>(r.vertices.size()) - 1;
    return mid[k];
  };
  for (const auto& f : m.faces) {
    const int ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]),
              ca = midpoint(f[2], f[0]);
    r.faces.push_back({f[0], ab, ca});
    r.faces.push_back({f[1], bc, ab});
    r.faces.push_back({f[2], ca, bc});
    r.faces.push_back({ab, bc, ca});
  }
  r.finalize();
  return r;
}

SurfaceState refine(const SurfaceState& s) {
  struct {
    SurfaceState operator()(const PotentialGraph& g) const { return refine(g); }
    SurfaceState operator()(const TwoChartGraph& t) const { return t; }
    SurfaceState operator()(const Mesh4D& m) const { return refine(m); }
    SurfaceState operator()(const CurveProduct& c) const { return refine(c); }
  } v;
  return std::visit(v, s);
}

}  // namespace lmcf
