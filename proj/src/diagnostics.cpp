#include "lmcf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "lmcf/parallel.hpp"

namespace lmcf {

ExcessReport excess(const SampleList& samples, double alpha,
                    const TailSpec& tail, double h) {
  ExcessReport r;
  r.alpha = alpha;
  r.plane_pair_reference = 8.0 * kPi;
  auto area = gaussian_integral(
      samples, [](const SurfaceSample&) { return 1.0; }, {}, tail, h);
  r.gaussian_area = area.value;
  r.tail_bound = area.truncation_bound;
  r.quad_error = area.quad_error;

  // circular pre-centering so the weighted mean is wrap-safe
  double cs = 0.0, sn = 0.0;
  for (const auto& s : samples) {
    const double w = std::exp(-s.x.squaredNorm() / 4.0) * s.dA;
    cs += w * std::cos(s.theta);
    sn += w * std::sin(s.theta);
  }
  const double center = std::atan2(sn, cs);
  const double wsum = area.value;
  double mean = 0.0;
  for (const auto& s : samples) {
    const double w = std::exp(-s.x.squaredNorm() / 4.0) * s.dA;
    mean += w * angle_diff(s.theta, center);
  }
  mean /= std::max(wsum, 1e-300);
  r.theta0_star = wrap_angle(center + mean);
  auto l2 = gaussian_integral(
      samples,
      [&](const SurfaceSample& s) {
        return std::pow(angle_diff(s.theta, r.theta0_star), 2);
      },
      {}, TailSpec{}, h);
  r.theta_l2_term = l2.value;
  r.excess = r.gaussian_area - r.plane_pair_reference + r.theta_l2_term;
  r.excess_alpha = std::copysign(std::pow(std::abs(r.excess), alpha), r.excess);
  return r;
}

double dist_IV(const SampleList& samples, const PlanePair& V,
               const TailSpec& tail) {
  if (!V.special) fail(ErrorCode::NotSpecial, "dist_IV: pair is not special");
  auto r = gaussian_integral(
      samples,
      [&](const SurfaceSample& s) {
        const double dv = V.dist_point(s.x);
        const double dth = angle_diff(s.theta, V.theta_V);
        return s.x.squaredNorm() * dv * dv + dth * dth;
      },
      {}, tail);
  return std::sqrt(std::max(0.0, r.value));
}

DistanceReport dist_DV(const SampleList& samples, const PlanePair& V,
                       double c1, const TailSpec& tail) {
  DistanceReport r;
  r.I_V = dist_IV(samples, V, tail);
  auto g = graphicality_detect(samples, V, 1.0, 2.0, c1);
  r.graphical = g.has_value();
  if (g) {
    r.sup_u = g->sup_u;
    r.sup_grad_u = g->sup_grad_u;
    r.D_V = r.I_V;
    r.D_V_infinite = false;
  } else {
    r.D_V = std::numeric_limits<double>::infinity();
    r.D_V_infinite = true;
  }
  const NeckCoordinates nc = neck_coordinates(V);
  double dv = 0.0, zmin = 1e300;
  for (const auto& s : samples) {
    dv = std::max(dv, V.dist_point(s.x));
    zmin = std::min(zmin, std::abs(nc.zw(s.x)));
  }
  r.dv_max = dv;
  r.zw_min = samples.empty() ? 0.0 : zmin;
  return r;
}

ZwSummary zw_field(const SampleList& samples, const NeckCoordinates& nc,
                   const PlanePair& V, std::vector<double>* per_sample) {
  ZwSummary r;
  r.min_zw = 1e300;
  r.ratio_lo = 1e300;
  if (per_sample) per_sample->resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Vec4& x = samples[i].x;
    const double az = std::abs(nc.z(x)), aw = std::abs(nc.w(x));
    const double zw = std::abs(nc.zw(x));
    if (per_sample) (*per_sample)[i] = zw;
    r.min_zw = std::min(r.min_zw, zw);
    r.max_zw = std::max(r.max_zw, zw);
    r.identity_defect = std::max(
        r.identity_defect,
        std::abs(std::min(az, aw) * std::max(az, aw) - zw));
    const double denom = x.norm() * V.dist_point(x);
    if (denom > 1e-12) {
      r.ratio_lo = std::min(r.ratio_lo, zw / denom);
      r.ratio_hi = std::max(r.ratio_hi, zw / denom);
    }
  }
  if (samples.empty()) r.min_zw = r.ratio_lo = 0.0;
  return r;
}

double graphicality_radius(double d, double p0) {
  if (!(d > 0.0 && d <= 1.0) || !(p0 > 1.0))
    fail(ErrorCode::DomainError,
         "graphicality_radius: need d in (0,1], p0 > 1");
  return std::sqrt(4.0 * p0 * std::log(1.0 / (d * d)));
}

// ---------------------------------------------------------------------------
// Liouville primitive

LiouvilleReport liouville_primitive(const Mesh4D& m, double exact_tol,
                                    std::optional<double> rational_a) {
  const auto S = CalibratedStructure::standard();
  LiouvilleReport r;
  r.exact_tol = exact_tol;
  const int n = m.nv();
  if (n == 0) fail(ErrorCode::DisconnectedRegion, "liouville: empty mesh");
  r.beta.assign(n, 0.0);

  // undirected edge list with lambda integrated by the midpoint rule
  std::map<std::pair<int, int>, double> lam;  // (a<b) -> integral a->b
  for (const auto& f : m.faces)
    for (int k = 0; k < 3; ++k) {
      int a = f[k], b = f[(k + 1) % 3];
      bool flip = a > b;
      if (flip) std::swap(a, b);
      const Vec4 mid = 0.5 * (m.vertices[a] + m.vertices[b]);
      const Vec4 e = m.vertices[b] - m.vertices[a];
      lam[{a, b}] = liouville(S, mid, e);
      (void)flip;
    }
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (const auto& [e, v] : lam) {
    adj[e.first].push_back({e.second, v});
    adj[e.second].push_back({e.first, -v});
  }
  // BFS spanning tree from vertex 0
  std::vector<char> seen(n, 0);
  std::vector<int> queue = {0};
  std::set<std::pair<int, int>> tree;
  seen[0] = 1;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const int a = queue[q];
    for (const auto& [b, v] : adj[a]) {
      if (seen[b]) continue;
      seen[b] = 1;
      r.beta[b] = r.beta[a] + v;
      tree.insert({std::min(a, b), std::max(a, b)});
      queue.push_back(b);
    }
  }
  for (char s : seen)
    if (!s)
      fail(ErrorCode::DisconnectedRegion, "liouville: mesh not connected");

  // periods: closure defects on non-tree edges
  double rational = 0.0;
  for (const auto& [e, v] : lam) {
    if (tree.count(e)) continue;
    const double defect = r.beta[e.second] - r.beta[e.first] - v;
    r.max_loop_integral = std::max(r.max_loop_integral, std::abs(defect));
    if (rational_a) {
      const double a = *rational_a;
      const double k = std::round(defect / a);
      rational = std::max(rational, std::abs(defect - k * a));
    }
  }
  r.exact = r.max_loop_integral <= exact_tol;
  if (rational_a) r.rationality_defect = rational;

  // gradient check: least-squares vertex gradient of beta vs J x^perp
  const auto vf = vertex_faces(m);
  const auto samples = embed(m);
  double gd = 0.0;
  for (int i = 0; i < n; ++i) {
    if (m.boundary[i] || vf[i].empty()) continue;
    std::set<int> nb;
    for (int fi : vf[i])
      for (int k = 0; k < 3; ++k)
        if (m.faces[fi][k] != i) nb.insert(m.faces[fi][k]);
    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    const Frame42& fr = samples[i].frame;
    for (int j : nb) {
      const Vec4 e = m.vertices[j] - m.vertices[i];
      const Vec2 et(fr.col(0).dot(e), fr.col(1).dot(e));
      A += et * et.transpose();
      rhs += et * (r.beta[j] - r.beta[i]);
    }
    const Vec2 g = A.ldlt().solve(rhs);
    const Vec4 target = S.J() * samples[i].x_perp();
    const Vec2 tt(fr.col(0).dot(target), fr.col(1).dot(target));
    gd = std::max(gd, (g - tt).norm());
  }
  r.grad_defect = gd;
  return r;
}

std::vector<double> liouville_loops(const CurveProduct& c) {
  std::vector<double> out;
  for (const Polyline* p : {&c.g1, &c.g2}) {
    if (!p->closed) continue;
    // integral of (x dy - y dx) over the factor loop
    double acc = 0.0;
    const int n = static_cast<int>(p->pts.size());
    for (int i = 0; i < n; ++i) {
      const Vec2 &a = p->pts[i], &b = p->pts[(i + 1) % n];
      const Vec2 mid = 0.5 * (a + b), e = b - a;
      acc += mid[0] * e[1] - mid[1] * e[0];
    }
    out.push_back(acc);
  }
  return out;
}

// ---------------------------------------------------------------------------
// best-fit pair (Nelder-Mead over the special slice)

namespace {
using Params = Eigen::Matrix<double, 6, 1>;

PlanePair pair_from_params(const PlanePair& seed, const Params& p) {
  Mat2 s1, s2;
  s1 << p[0], p[1], p[1], p[2];
  s2 << p[3], p[4], p[4], p[5];
  return make_special_pair(seed, s1, s2);
}
}  // namespace

BestFitResult best_fit_pair(const SampleList& samples, const PlanePair& seed,
                            int iterations) {
  if (!seed.special)
    fail(ErrorCode::NotSpecial, "best_fit_pair: seed must be special");
  auto objective = [&](const Params& p) {
    return dist_IV(samples, pair_from_params(seed, p));
  };
  // Nelder-Mead
  const int dim = 6;
  std::vector<Params> simplex;
  std::vector<double> value;
  simplex.push_back(Params::Zero());
  value.push_back(objective(simplex[0]));
  const double seed_value = value[0];
  for (int i = 0; i < dim; ++i) {
    Params p = Params::Zero();
    p[i] = 0.02;
    simplex.push_back(p);
    value.push_back(objective(p));
  }
  auto order = [&]() {
    std::vector<int> idx(simplex.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return value[a] < value[b]; });
    std::vector<Params> s2;
    std::vector<double> v2;
    for (int i : idx) {
      s2.push_back(simplex[i]);
      v2.push_back(value[i]);
    }
    simplex = s2;
    value = v2;
  };
  for (int it = 0; it < iterations; ++it) {
    order();
    if (value[dim] - value[0] < 1e-14 * (1.0 + value[0])) break;
    Params centroid = Params::Zero();
    for (int i = 0; i < dim; ++i) centroid += simplex[i];
    centroid /= dim;
    const Params refl = centroid + (centroid - simplex[dim]);
    const double fr = objective(refl);
    if (fr < value[0]) {
      const Params exp_ = centroid + 2.0 * (centroid - simplex[dim]);
      const double fe = objective(exp_);
      simplex[dim] = fe < fr ? exp_ : refl;
      value[dim] = std::min(fe, fr);
    } else if (fr < value[dim - 1]) {
      simplex[dim] = refl;
      value[dim] = fr;
    } else {
      const Params con = centroid + 0.5 * (simplex[dim] - centroid);
      const double fc = objective(con);
      if (fc < value[dim]) {
        simplex[dim] = con;
        value[dim] = fc;
      } else {
        for (int i = 1; i <= dim; ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          value[i] = objective(simplex[i]);
        }
      }
    }
  }
  order();
  BestFitResult res;
  res.seed_I_V = seed_value;
  if (value[0] < seed_value) {
    res.V = pair_from_params(seed, simplex[0]);
    res.I_V = value[0];
    res.improved = true;
  } else {
    res.V = seed;
    res.I_V = seed_value;
    res.improved = false;
  }
  res.dist_to_seed = pair_distance(seed, res.V, 512);
  return res;
}

// ---------------------------------------------------------------------------
// scale scan

ScaleScanResult scale_scan(const FlowTrace& trace, const Vec4& x0, double t0,
                           const PlanePair& V0, const ScaleScanOptions& opt) {
  if (!(opt.eps_close > 0 && opt.eps_close < 1))
    fail(ErrorCode::DomainError, "scale_scan: eps_close in (0,1)");
  ScaleScanResult res;
  const double ratio = std::pow(2.0, 0.25);
  // geometric grid containing lambda = 1
  std::vector<double> lams;
  for (double l = 1.0; l >= opt.lambda_lo / ratio; l /= ratio)
    lams.push_back(l);
  std::reverse(lams.begin(), lams.end());
  for (double l = ratio; l <= opt.lambda_hi * ratio; l *= ratio)
    lams.push_back(l);

  const double eps = opt.eps_close;
  auto close_at = [&](double lambda, PlanePair& V_fit) -> bool {
    // time block [-1/eps^2, -eps^2] scaled by lambda^2, sampled
    // geometrically
    PlanePair V = V_fit;
    for (int k = 0; k < opt.time_samples; ++k) {
      const double s =
          eps * eps *
          std::pow(1.0 / (eps * eps * eps * eps),
                   opt.time_samples == 1
                       ? 0.0
                       : static_cast<double>(k) / (opt.time_samples - 1));
      const double t = t0 - lambda * lambda * s;
      SurfaceState view;
      try {
        view = rescale_state(trace.state_at(t), x0, 1.0 / lambda);
      } catch (const Error&) {
        return false;  // block time not covered by the trace
      }
      auto samples = embed(view);
      auto g = graphicality_detect(samples, V, eps, 1.0 / eps,
                                   std::max(eps, opt.c1), 10, 36);
      if (!g) return false;
      if (g->sup_u > eps || g->sup_grad_u > eps) return false;
    }
    if (opt.fit_pairs) {
      // refine the per-scale pair on the middle-time view
      const double smid = 1.0;
      try {
        SurfaceState view = rescale_state(
            trace.state_at(t0 - lambda * lambda * smid), x0, 1.0 / lambda);
        auto fit = best_fit_pair(embed(view), V, 120);
        V_fit = fit.V;
      } catch (const Error&) {
      }
    }
    return true;
  };

  res.lambdas = lams;
  res.close.assign(lams.size(), 0);
  res.V_lambda.assign(lams.size(), V0);
  std::size_t i_one = 0;
  for (std::size_t i = 0; i < lams.size(); ++i)
    if (std::abs(lams[i] - 1.0) < 1e-12) i_one = i;

  // outward from lambda = 1, reusing the previous scale's fit as seed
  PlanePair Vcur = V0;
  if (!close_at(1.0, Vcur))
    fail(ErrorCode::NotCloseAtUnitScale, "scale_scan: not close at scale 1");
  res.close[i_one] = 1;
  res.V_lambda[i_one] = Vcur;
  PlanePair Vdown = Vcur;
  for (std::size_t i = i_one; i-- > 0;) {
    if (!close_at(res.lambdas[i], Vdown)) break;
    res.close[i] = 1;
    res.V_lambda[i] = Vdown;
  }
  PlanePair Vup = Vcur;
  for (std::size_t i = i_one + 1; i < lams.size(); ++i) {
    if (!close_at(res.lambdas[i], Vup)) break;
    res.close[i] = 1;
    res.V_lambda[i] = Vup;
  }
  std::size_t lo = i_one, hi = i_one;
  while (lo > 0 && res.close[lo - 1]) --lo;
  while (hi + 1 < lams.size() && res.close[hi + 1]) ++hi;
  res.lambda_min = res.lambdas[lo];
  res.lambda_max = res.lambdas[hi];
  return res;
}

// ---------------------------------------------------------------------------
// lawlor fit

LawlorFit lawlor_fit(const SampleList& samples, const NeckCoordinates& nc,
                     double fit_radius) {
  std::array<int, 8> sector{};
  cplx acc = 0.0;
  int count = 0;
  for (const auto& s : samples) {
    if (s.x.norm() > fit_radius) continue;
    const cplx z = nc.z(s.x);
    acc += z * nc.w(s.x);
    ++count;
    const double phi = std::arg(z) + kPi;
    int k = static_cast<int>(phi / (kPi / 4.0)) % 8;
    sector[k] = 1;
  }
  int covered = 0;
  for (int s : sector) covered += s;
  if (count < 4 || covered < 3)
    fail(ErrorCode::IllConditioned,
         "lawlor_fit: samples span fewer than 3 angular sectors");
  LawlorFit fit;
  fit.eps = acc / static_cast<double>(count);
  fit.sign = fit.eps.real() > 0 ? 1 : (fit.eps.real() < 0 ? -1 : 0);
  double rms = 0.0;
  for (const auto& s : samples) {
    if (s.x.norm() > fit_radius) continue;
    rms += std::norm(nc.zw(s.x) - fit.eps);
  }
  fit.residual = std::sqrt(rms / count) / std::max(std::abs(fit.eps), 1e-300);
  return fit;
}

double gaussian_density(const SampleList& samples, const Vec4& x0,
                        double t0_minus_t) {
  return gaussian_integral(
             samples, [](const SurfaceSample&) { return 1.0; },
             GaussianWeight{x0, t0_minus_t, true})
      .value;
}

}  // namespace lmcf
