#include "lmcf/drift.hpp"

#include <algorithm>
#include <cmath>

#include "lmcf/parallel.hpp"

namespace lmcf {

namespace {
double hermite_he(int k, double t) {
  double hm = 1.0, h = t;
  if (k == 0) return 1.0;
  for (int j = 1; j < k; ++j) {
    const double hn = t * h - j * hm;
    hm = h;
    h = hn;
  }
  return h;
}
}  // namespace

double Hermite1D::norm_const(int k) {
  double fact = 1.0;
  for (int j = 2; j <= k; ++j) fact *= j;
  return std::sqrt(std::sqrt(2.0) * fact * std::sqrt(2.0 * kPi));
}

double Hermite1D::value(int k, double x) {
  return hermite_he(k, x / std::sqrt(2.0)) / norm_const(k);
}

double Hermite1D::deriv(int k, double x) {
  if (k == 0) return 0.0;
  return k * hermite_he(k - 1, x / std::sqrt(2.0)) /
         (std::sqrt(2.0) * norm_const(k));
}

HermiteBasis HermiteBasis::make(int k_max) {
  if (k_max < 0 || k_max > 20)
    fail(ErrorCode::DomainError, "HermiteBasis: k_max out of range");
  HermiteBasis b;
  b.k_max = k_max;
  for (int c = 0; c < 2; ++c)
    for (int k1 = 0; k1 <= k_max; ++k1)
      for (int k2 = 0; k1 + k2 <= k_max; ++k2)
        b.modes.push_back({c, k1, k2, 0.5 - 0.5 * (k1 + k2)});
  return b;
}

Vec2 HermiteBasis::eval(const DriftMode& m, const Vec2& x) const {
  const double v = Hermite1D::value(m.k1, x[0]) * Hermite1D::value(m.k2, x[1]);
  return m.component == 0 ? Vec2(v, 0.0) : Vec2(0.0, v);
}

namespace {
// 4th-order centered stencils
template <typename F>
double fd1(F&& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) /
         (12 * h);
}
template <typename F>
double fd2(F&& f, double x, double h) {
  return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) -
          f(x - 2 * h)) /
         (12 * h * h);
}
}  // namespace

double HermiteBasis::verify(double h, double probe_radius) const {
  double worst = 0.0;
  for (const auto& m : modes) {
    auto scalar = [&](double x, double y) {
      return Hermite1D::value(m.k1, x) * Hermite1D::value(m.k2, y);
    };
    for (double x = -probe_radius; x <= probe_radius; x += probe_radius / 3)
      for (double y = -probe_radius; y <= probe_radius; y += probe_radius / 3) {
        const double lap =
            fd2([&](double t) { return scalar(t, y); }, x, h) +
            fd2([&](double t) { return scalar(x, t); }, y, h);
        const double adv =
            x * fd1([&](double t) { return scalar(t, y); }, x, h) +
            y * fd1([&](double t) { return scalar(x, t); }, y, h);
        const double res =
            lap + 0.5 * scalar(x, y) - 0.5 * adv - m.rate * scalar(x, y);
        worst = std::max(worst, std::abs(res));
      }
  }
  return worst;
}

double HermiteBasis::verify_log_mode(double h, double r_in, double r_out) {
  // u = d ln|x| = (x, y)/|x|^2 componentwise; rate must be 1.
  auto comp = [&](int c, double x, double y) {
    const double r2 = x * x + y * y;
    return (c == 0 ? x : y) / r2;
  };
  double worst = 0.0;
  for (int c = 0; c < 2; ++c)
    for (double r = r_in; r <= r_out; r += (r_out - r_in) / 5)
      for (double phi = 0.1; phi < 2 * kPi; phi += kPi / 3) {
        const double x = r * std::cos(phi), y = r * std::sin(phi);
        const double lap = fd2([&](double t) { return comp(c, t, y); }, x, h) +
                           fd2([&](double t) { return comp(c, x, t); }, y, h);
        const double adv =
            x * fd1([&](double t) { return comp(c, t, y); }, x, h) +
            y * fd1([&](double t) { return comp(c, x, t); }, y, h);
        const double res =
            lap + 0.5 * comp(c, x, y) - 0.5 * adv - 1.0 * comp(c, x, y);
        worst = std::max(worst, std::abs(res));
      }
  return worst;
}

SpectralField SpectralField::zero(const HermiteBasis& basis, int n_planes) {
  SpectralField f;
  f.k_max = basis.k_max;
  f.n_planes = n_planes;
  for (int p = 0; p < n_planes; ++p)
    f.coef[p].assign(basis.modes.size(), 0.0);
  return f;
}

double SpectralField::norm() const {
  double s = 0.0;
  for (int p = 0; p < n_planes; ++p) {
    s += a0[p] * a0[p];
    for (double c : coef[p]) s += c * c;
  }
  return std::sqrt(s);
}

double SpectralField::norm_at(const HermiteBasis& basis, double s) const {
  double acc = 0.0;
  for (int p = 0; p < n_planes; ++p) {
    acc += a0[p] * a0[p] * std::exp(2.0 * s);
    for (std::size_t i = 0; i < coef[p].size(); ++i)
      acc += coef[p][i] * coef[p][i] * std::exp(2.0 * basis.modes[i].rate * s);
  }
  return std::sqrt(acc);
}

Vec2 SpectralField::eval_smooth(const HermiteBasis& basis, int plane,
                                const Vec2& x) const {
  Vec2 v = Vec2::Zero();
  for (std::size_t i = 0; i < coef[plane].size(); ++i)
    if (coef[plane][i] != 0.0) v += coef[plane][i] * basis.eval(basis.modes[i], x);
  return v;
}

Vec2 SpectralField::eval(const HermiteBasis& basis, int plane,
                         const Vec2& x) const {
  Vec2 v = eval_smooth(basis, plane, x);
  const double r2 = x.squaredNorm();
  if (a0[plane] != 0.0 && r2 > 0) v += a0[plane] * x / r2;
  return v;
}

SpectralField evolve(const HermiteBasis& basis, const SpectralField& f,
                     double s) {
  SpectralField out = f;
  for (int p = 0; p < f.n_planes; ++p) {
    out.a0[p] *= std::exp(s);
    for (std::size_t i = 0; i < out.coef[p].size(); ++i)
      out.coef[p][i] *= std::exp(basis.modes[i].rate * s);
  }
  return out;
}

SpectralField project_to_basis(const HermiteBasis& basis,
                               const std::function<Vec2(Vec2)>& u, double R,
                               int n) {
  SpectralField f = SpectralField::zero(basis, 1);
  const double h = 2.0 * R / (n - 1);
  // separable quadrature: for each component and each k2, reduce rows
  std::vector<double> ux(static_cast<std::size_t>(n) * n),
      uy(static_cast<std::size_t>(n) * n);
  par::parallel_for(n, [&](std::ptrdiff_t i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 x(-R + i * h, -R + j * h);
      const Vec2 v = u(x);
      ux[i * n + j] = v[0];
      uy[i * n + j] = v[1];
    }
  });
  const int K = basis.k_max;
  // row reduction: for each i, integrate over y against phi_k2 * weight-half
  std::vector<double> rx(static_cast<std::size_t>(n) * (K + 1), 0.0),
      ry(static_cast<std::size_t>(n) * (K + 1), 0.0);
  par::parallel_for(n, [&](std::ptrdiff_t i) {
    for (int k2 = 0; k2 <= K; ++k2) {
      double sx = 0.0, sy = 0.0;
      for (int j = 0; j < n; ++j) {
        const double y = -R + j * h;
        double w = h * std::exp(-y * y / 4.0) * Hermite1D::value(k2, y);
        if (j == 0 || j == n - 1) w *= 0.5;
        sx += ux[i * n + j] * w;
        sy += uy[i * n + j] * w;
      }
      rx[i * (K + 1) + k2] = sx;
      ry[i * (K + 1) + k2] = sy;
    }
  });
  for (std::size_t m = 0; m < basis.modes.size(); ++m) {
    const auto& md = basis.modes[m];
    const auto& r = md.component == 0 ? rx : ry;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = -R + i * h;
      double w = h * std::exp(-x * x / 4.0) * Hermite1D::value(md.k1, x);
      if (i == 0 || i == n - 1) w *= 0.5;
      s += r[i * (K + 1) + md.k2] * w;
    }
    f.coef[0][m] = s;
  }
  return f;
}

// ---------------------------------------------------------------------------
// FD oracle

DriftGridField DriftGridField::sample(const std::function<Vec2(Vec2)>& u0,
                                      double R, int n) {
  DriftGridField g;
  g.R = R;
  g.n = n;
  g.u.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g.u[g.idx(i, j)] = u0(g.coords(i, j));
  return g;
}

double DriftGridField::weighted_l2_diff(
    const std::function<Vec2(Vec2)>& ref) const {
  const double hh = h();
  return std::sqrt(par::deterministic_sum(
      static_cast<std::ptrdiff_t>(u.size()), [&](std::ptrdiff_t q) {
        const int i = static_cast<int>(q) / n, j = static_cast<int>(q) % n;
        const Vec2 x = coords(i, j);
        return (u[q] - ref(x)).squaredNorm() *
               std::exp(-x.squaredNorm() / 4.0) * hh * hh;
      }));
}

double DriftGridField::weighted_l2_norm() const {
  const double hh = h();
  return std::sqrt(par::deterministic_sum(
      static_cast<std::ptrdiff_t>(u.size()), [&](std::ptrdiff_t q) {
        const int i = static_cast<int>(q) / n, j = static_cast<int>(q) % n;
        const Vec2 x = coords(i, j);
        return u[q].squaredNorm() * std::exp(-x.squaredNorm() / 4.0) * hh * hh;
      }));
}

namespace {
// 4th-order drift operator on the grid interior; zero outside
void drift_rhs(const DriftGridField& g, const std::vector<Vec2>& u,
               std::vector<Vec2>& out) {
  const int n = g.n;
  const double h = g.h();
  par::parallel_for(n, [&](std::ptrdiff_t ii) {
    const int i = static_cast<int>(ii);
    for (int j = 0; j < n; ++j) {
      if (i < 2 || j < 2 || i >= n - 2 || j >= n - 2) {
        out[g.idx(i, j)] = Vec2::Zero();
        continue;
      }
      const Vec2 x = g.coords(i, j);
      auto at = [&](int a, int b) -> const Vec2& { return u[g.idx(a, b)]; };
      const Vec2 lap =
          (-at(i + 2, j) + 16 * at(i + 1, j) - 30 * at(i, j) +
           16 * at(i - 1, j) - at(i - 2, j) - at(i, j + 2) +
           16 * at(i, j + 1) - 30 * at(i, j) + 16 * at(i, j - 1) -
           at(i, j - 2)) /
          (12 * h * h);
      const Vec2 dx_ =
          (-at(i + 2, j) + 8 * at(i + 1, j) - 8 * at(i - 1, j) +
           at(i - 2, j)) /
          (12 * h);
      const Vec2 dy_ =
          (-at(i, j + 2) + 8 * at(i, j + 1) - 8 * at(i, j - 1) +
           at(i, j - 2)) /
          (12 * h);
      out[g.idx(i, j)] =
          lap + 0.5 * at(i, j) - 0.5 * (x[0] * dx_ + x[1] * dy_);
    }
  });
}
}  // namespace

DriftGridField evolve_fd(const DriftGridField& u0, double s, double cfl) {
  if (!(cfl > 0 && cfl <= 0.2))
    fail(ErrorCode::CFLViolation, "evolve_fd: cfl out of (0, 0.2]");
  DriftGridField g = u0;
  const double h = g.h();
  const double dt0 = cfl * h * h;
  const std::size_t N = g.u.size();
  std::vector<Vec2> k1(N), k2(N), k3(N), k4(N), tmp(N);
  double t = 0.0;
  while (t < s - 1e-14) {
    const double dt = std::min(dt0, s - t);
    drift_rhs(g, g.u, k1);
    for (std::size_t q = 0; q < N; ++q) tmp[q] = g.u[q] + 0.5 * dt * k1[q];
    drift_rhs(g, tmp, k2);
    for (std::size_t q = 0; q < N; ++q) tmp[q] = g.u[q] + 0.5 * dt * k2[q];
    drift_rhs(g, tmp, k3);
    for (std::size_t q = 0; q < N; ++q) tmp[q] = g.u[q] + dt * k3[q];
    drift_rhs(g, tmp, k4);
    for (std::size_t q = 0; q < N; ++q)
      g.u[q] += dt / 6.0 * (k1[q] + 2 * k2[q] + 2 * k3[q] + k4[q]);
    t += dt;
  }
  return g;
}

double log_mode_growth_fd(double s, double r_in, double r_out, int nr,
                          int nphi) {
  // polar grid, Cartesian components; exact boundary e^s d ln|x|
  const double dlr = std::log(r_out / r_in) / nr;
  const double dphi = 2.0 * kPi / nphi;
  auto radius = [&](int k) { return r_in * std::exp(k * dlr); };
  auto exact = [&](int k, int j, double time) {
    const double r = radius(k), phi = j * dphi;
    const Vec2 x(r * std::cos(phi), r * std::sin(phi));
    return Vec2(std::exp(time) * x / x.squaredNorm());
  };
  std::vector<Vec2> u(static_cast<std::size_t>(nr + 1) * nphi);
  auto idx = [&](int k, int j) {
    return k * nphi + ((j % nphi) + nphi) % nphi;
  };
  for (int k = 0; k <= nr; ++k)
    for (int j = 0; j < nphi; ++j) u[idx(k, j)] = exact(k, j, 0.0);

  auto rhs = [&](const std::vector<Vec2>& v, std::vector<Vec2>& out,
                 double time) {
    (void)time;
    for (int k = 1; k < nr; ++k) {
      const double r = radius(k);
      for (int j = 0; j < nphi; ++j) {
        // Delta = e^{-2 rho}(d_rho^2 + d_phi^2), x.grad = d_rho
        const Vec2 upp = (v[idx(k + 1, j)] - 2 * v[idx(k, j)] +
                          v[idx(k - 1, j)]) /
                         (dlr * dlr);
        const Vec2 uqq = (v[idx(k, j + 1)] - 2 * v[idx(k, j)] +
                          v[idx(k, j - 1)]) /
                         (dphi * dphi);
        const Vec2 up = (v[idx(k + 1, j)] - v[idx(k - 1, j)]) / (2 * dlr);
        out[idx(k, j)] =
            (upp + uqq) / (r * r) + 0.5 * v[idx(k, j)] - 0.5 * up;
      }
    }
  };
  const double hmin = r_in * dlr;
  const double dt0 = 0.2 * std::min(hmin * hmin, dlr * dlr * r_in * r_in);
  std::vector<Vec2> k1(u.size()), tmp(u.size());
  double t = 0.0;
  while (t < s - 1e-14) {
    const double dt = std::min(dt0, s - t);
    rhs(u, k1, t);
    tmp = u;
    for (int k = 1; k < nr; ++k)
      for (int j = 0; j < nphi; ++j)
        tmp[idx(k, j)] = u[idx(k, j)] + 0.5 * dt * k1[idx(k, j)];
    for (int j = 0; j < nphi; ++j) {
      tmp[idx(0, j)] = exact(0, j, t + 0.5 * dt);
      tmp[idx(nr, j)] = exact(nr, j, t + 0.5 * dt);
    }
    rhs(tmp, k1, t + 0.5 * dt);
    for (int k = 1; k < nr; ++k)
      for (int j = 0; j < nphi; ++j) u[idx(k, j)] += dt * k1[idx(k, j)];
    t += dt;
    for (int j = 0; j < nphi; ++j) {
      u[idx(0, j)] = exact(0, j, t);
      u[idx(nr, j)] = exact(nr, j, t);
    }
  }
  // measured radial log coefficient at mid-radius vs the initial one
  const int kmid = nr / 2;
  double acc = 0.0;
  for (int j = 0; j < nphi; ++j) {
    const double phi = j * dphi;
    const Vec2 er(std::cos(phi), std::sin(phi));
    acc += u[idx(kmid, j)].dot(er) * radius(kmid);
  }
  return acc / nphi;  // equals e^s for the exact solution (a0 = 1)
}

// ---------------------------------------------------------------------------
// three-annulus

ThreeAnnulusVerdict three_annulus_check(const HermiteBasis& basis,
                                        const SpectralField& f,
                                        const ThreeAnnulusParams& p) {
  if (!p.skip_gap_check) {
    double min_nonzero = 1.0;  // log-mode rate
    for (const auto& m : basis.modes)
      if (m.rate != 0.0) min_nonzero = std::min(min_nonzero, std::abs(m.rate));
    if (!(p.lambda1 > 0 && p.lambda1 < p.a && p.a < p.lambda2 &&
          10.0 * p.a < min_nonzero))
      fail(ErrorCode::BadGapParams,
           "three_annulus_check: gap rule requires lambda1 < a < lambda2 and "
           "10a below the spectral gap");
  }
  ThreeAnnulusVerdict v;
  v.n0 = f.norm_at(basis, 0.0);
  v.n1 = f.norm_at(basis, 1.0);
  v.n2 = f.norm_at(basis, 2.0);
  if (v.n0 == 0.0 && v.n1 == 0.0) return v;
  v.part1_triggered = v.n1 >= std::exp(p.lambda1) * v.n0;
  if (v.part1_triggered) v.part1_ok = v.n2 >= std::exp(p.lambda2) * v.n1;
  // part 2 applies when no static (rate 0) mass is present
  bool has_static = false;
  for (int pl = 0; pl < f.n_planes; ++pl)
    for (std::size_t i = 0; i < f.coef[pl].size(); ++i)
      if (basis.modes[i].rate == 0.0 && f.coef[pl][i] != 0.0)
        has_static = true;
  v.part2_applicable = !has_static && f.norm() > 0;
  if (v.part2_applicable)
    v.part2_ok = (v.n2 >= std::exp(p.lambda1) * v.n1) ||
                 (v.n1 <= std::exp(-p.lambda1) * v.n0);
  return v;
}

// ---------------------------------------------------------------------------
// static splitting

StaticSplit split_static(const HermiteBasis& basis, const SpectralField& f) {
  if (f.n_planes != 2)
    fail(ErrorCode::DomainError, "split_static: needs a pair field");
  StaticSplit out;
  out.u00 = SpectralField::zero(basis, 2);
  out.u01 = SpectralField::zero(basis, 2);
  out.u_perp = f;

  // static block: all rate-0 modes; move them out of u_perp
  SpectralField u0 = SpectralField::zero(basis, 2);
  for (int p = 0; p < 2; ++p)
    for (std::size_t i = 0; i < f.coef[p].size(); ++i)
      if (basis.modes[i].rate == 0.0) {
        u0.coef[p][i] = f.coef[p][i];
        out.u_perp.coef[p][i] = 0.0;
      }

  // divergence of each static basis mode is a constant; evaluate at 0
  auto div_at0 = [&](const DriftMode& m) {
    if (m.component == 0)
      return Hermite1D::deriv(m.k1, 0.0) * Hermite1D::value(m.k2, 0.0);
    return Hermite1D::value(m.k1, 0.0) * Hermite1D::deriv(m.k2, 0.0);
  };
  double a_plane[2] = {0.0, 0.0};
  for (int p = 0; p < 2; ++p)
    for (std::size_t i = 0; i < f.coef[p].size(); ++i)
      if (basis.modes[i].rate == 0.0)
        a_plane[p] += u0.coef[p][i] * div_at0(basis.modes[i]);
  const double a = (a_plane[0] - a_plane[1]) / 8.0;

  // d(a |x|^2) = 2a (x dx + y dy): coefficients sqrt(2) N1 N0 * 2a on the
  // (1,0,dx) and (0,1,dy) modes
  const double c_id =
      2.0 * std::sqrt(2.0) * Hermite1D::norm_const(1) * Hermite1D::norm_const(0);
  auto add_radial = [&](SpectralField& g, int plane, double amp) {
    for (std::size_t i = 0; i < g.coef[plane].size(); ++i) {
      const auto& m = basis.modes[i];
      if (m.rate != 0.0) continue;
      if (m.component == 0 && m.k1 == 1 && m.k2 == 0)
        g.coef[plane][i] += amp * c_id;
      if (m.component == 1 && m.k1 == 0 && m.k2 == 1)
        g.coef[plane][i] += amp * c_id;
    }
  };
  // u01 = (d(a|x|^2), d(-a|x|^2)); u00 = u0 - u01
  add_radial(out.u01, 0, a);
  add_radial(out.u01, 1, -a);
  out.u00 = u0;
  for (int p = 0; p < 2; ++p)
    for (std::size_t i = 0; i < u0.coef[p].size(); ++i)
      out.u00.coef[p][i] -= out.u01.coef[p][i];
  for (int p = 0; p < 2; ++p) {
    out.div_u00[p] = 0.0;
    out.div_u01[p] = 0.0;
    for (std::size_t i = 0; i < f.coef[p].size(); ++i)
      if (basis.modes[i].rate == 0.0) {
        out.div_u00[p] += out.u00.coef[p][i] * div_at0(basis.modes[i]);
        out.div_u01[p] += out.u01.coef[p][i] * div_at0(basis.modes[i]);
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// log-mode extraction

LogModeFit fit_log_mode(const std::function<Vec2(Vec2)>& u, double r_in,
                        double r_out, int nr, int nphi) {
  if (nphi < 8)
    fail(ErrorCode::InsufficientAngularCoverage,
         "fit_log_mode: need at least 8 angular samples");
  if (!(0 < r_in && r_in < r_out))
    fail(ErrorCode::DomainError, "fit_log_mode: bad annulus");
  double acc = 0.0;
  for (int k = 0; k < nr; ++k) {
    const double r = r_in + (k + 0.5) * (r_out - r_in) / nr;
    double ring = 0.0;
    for (int j = 0; j < nphi; ++j) {
      const double phi = (j + 0.5) * 2.0 * kPi / nphi;
      const Vec2 x(r * std::cos(phi), r * std::sin(phi));
      // angular mean of <u, x>: equals a0 exactly on the log mode and
      // kills every polynomial mode coupling at matching order
      ring += u(x).dot(x);
    }
    acc += ring / nphi;
  }
  LogModeFit fit;
  fit.a0 = acc / nr;
  const double a0 = fit.a0;
  fit.remainder = [u, a0](Vec2 x) {
    return Vec2(u(x) - a0 * x / x.squaredNorm());
  };
  return fit;
}

}  // namespace lmcf
