#include "lmcf/flow.hpp"

#include <algorithm>
#include <cmath>

#include "lmcf/parallel.hpp"

namespace lmcf {

void FlowTrace::validate() const {
  if (times.size() != states.size())
    fail(ErrorCode::DomainError, "FlowTrace: times/states mismatch");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      fail(ErrorCode::DomainError, "FlowTrace: times not strictly increasing");
  for (const auto& row : channel_rows)
    if (row.size() != channel_names.size())
      fail(ErrorCode::DomainError, "FlowTrace: ragged channel rows");
}

std::vector<std::pair<double, double>> FlowTrace::channel(
    const std::string& name) const {
  std::vector<std::pair<double, double>> out;
  for (std::size_t c = 0; c < channel_names.size(); ++c) {
    if (channel_names[c] != name) continue;
    for (std::size_t i = 0; i < channel_times.size(); ++i)
      out.emplace_back(channel_times[i], channel_rows[i][c]);
    return out;
  }
  fail(ErrorCode::DomainError, "FlowTrace: unknown channel " + name);
}

namespace {
// topology-compatible linear interpolation of two states
bool lerp_states(const SurfaceState& a, const SurfaceState& b, double w,
                 SurfaceState& out) {
  if (a.index() != b.index()) return false;
  if (const auto* ga = std::get_if<PotentialGraph>(&a)) {
    const auto& gb = std::get<PotentialGraph>(b);
    if (ga->n != gb.n || ga->h != gb.h) return false;
    PotentialGraph g = *ga;
    for (std::size_t i = 0; i < g.f.size(); ++i)
      g.f[i] = (1 - w) * ga->f[i] + w * gb.f[i];
    out = g;
    return true;
  }
  if (const auto* ma = std::get_if<Mesh4D>(&a)) {
    const auto& mb = std::get<Mesh4D>(b);
    if (ma->nv() != mb.nv() || ma->faces != mb.faces) return false;
    Mesh4D m = *ma;
    for (int i = 0; i < m.nv(); ++i)
      m.vertices[i] = (1 - w) * ma->vertices[i] + w * mb.vertices[i];
    out = m;
    return true;
  }
  if (const auto* ca = std::get_if<CurveProduct>(&a)) {
    const auto& cb = std::get<CurveProduct>(b);
    if (ca->g1.pts.size() != cb.g1.pts.size() ||
        ca->g2.pts.size() != cb.g2.pts.size())
      return false;
    CurveProduct c = *ca;
    for (std::size_t i = 0; i < c.g1.pts.size(); ++i)
      c.g1.pts[i] = (1 - w) * ca->g1.pts[i] + w * cb.g1.pts[i];
    for (std::size_t i = 0; i < c.g2.pts.size(); ++i)
      c.g2.pts[i] = (1 - w) * ca->g2.pts[i] + w * cb.g2.pts[i];
    out = c;
    return true;
  }
  return false;  // TwoChartGraph checkpoints are static initial data
}
}  // namespace

SurfaceState FlowTrace::state_at(double t) const {
  if (times.empty()) fail(ErrorCode::OutOfRange, "FlowTrace: empty trace");
  if (t < times.front() - 1e-12 || t > times.back() + 1e-12)
    fail(ErrorCode::OutOfRange, "FlowTrace: t outside trace range");
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  const std::size_t hi = std::min<std::size_t>(
      times.size() - 1, static_cast<std::size_t>(it - times.begin()));
  if (hi == 0 || times[hi] == t) return states[hi];
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  SurfaceState out = states[lo];
  if (lerp_states(states[lo], states[hi], w, out)) return out;
  return w < 0.5 ? states[lo] : states[hi];
}

// ---------------------------------------------------------------------------
// potential engine

namespace {
template <typename Runner>
PotentialGraph step_potential_impl(const PotentialGraph& g, double dt,
                                   double t, const BoundaryFn& boundary,
                                   Runner&& for_each_row) {
  if (dt > 0.5 * g.h * g.h + 1e-15)
    fail(ErrorCode::CFLViolation, "step_potential: dt > h^2/2");
  const int s = g.side();
  auto rhs = [&](const PotentialGraph& G, std::vector<double>& out) {
    for_each_row(s, [&](std::ptrdiff_t ii) {
      const int i = static_cast<int>(ii);
      for (int j = 0; j < s; ++j)
        out[G.idx(i, j)] =
            G.interior(i, j) ? angle_of_hessian(G.hessian(i, j)) : 0.0;
    });
  };
  auto set_boundary = [&](PotentialGraph& G, double tt) {
    if (!boundary) return;
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j)
        if (!G.interior(i, j)) G.f[G.idx(i, j)] = boundary(G.coords(i, j), tt);
  };
  std::vector<double> k1(g.f.size()), k2(g.f.size());
  rhs(g, k1);
  PotentialGraph mid = g;
  for (std::size_t i = 0; i < mid.f.size(); ++i) mid.f[i] += 0.5 * dt * k1[i];
  set_boundary(mid, t + 0.5 * dt);
  rhs(mid, k2);
  PotentialGraph out = g;
  for (std::size_t i = 0; i < out.f.size(); ++i) out.f[i] += dt * k2[i];
  set_boundary(out, t + dt);
  for (double v : out.f)
    if (!std::isfinite(v))
      fail(ErrorCode::NonFinite, "step_potential: non-finite potential");
  return out;
}
}  // namespace

PotentialGraph step_potential(const PotentialGraph& g, double dt, double t,
                              const BoundaryFn& boundary) {
  return step_potential_impl(g, dt, t, boundary,
                             [](std::ptrdiff_t n, auto&& b) {
                               par::parallel_for(n, b);
                             });
}

PotentialGraph step_potential_serial(const PotentialGraph& g, double dt,
                                     double t, const BoundaryFn& boundary) {
  return step_potential_impl(g, dt, t, boundary,
                             [](std::ptrdiff_t n, auto&& b) {
                               par::serial_for(n, b);
                             });
}

// ---------------------------------------------------------------------------
// mesh engine

namespace {
Mesh4D step_mesh_impl(const Mesh4D& m, double dt, bool parallel) {
  const double h = m.min_edge();
  if (dt > 0.5 * h * h + 1e-15)
    fail(ErrorCode::CFLViolation, "step_mesh: dt > min_edge^2/2");
  const auto H = parallel ? m.mean_curvature() : m.mean_curvature_serial();
  Mesh4D out = m;
  for (int i = 0; i < out.nv(); ++i) {
    out.vertices[i] += dt * H[i];
    if (!out.vertices[i].allFinite())
      fail(ErrorCode::NonFinite, "step_mesh: non-finite vertex");
  }
  // degenerate elements signal that a remesh is due
  for (int fi = 0; fi < out.nf(); ++fi) {
    const auto& f = out.faces[fi];
    const double e01 = (out.vertices[f[0]] - out.vertices[f[1]]).norm();
    const double e12 = (out.vertices[f[1]] - out.vertices[f[2]]).norm();
    const double e20 = (out.vertices[f[2]] - out.vertices[f[0]]).norm();
    const double lmax = std::max({e01, e12, e20});
    if (out.face_area(fi) < 0.01 * lmax * lmax)
      fail(ErrorCode::DegenerateTriangle, "step_mesh: degenerate face");
  }
  return out;
}
}  // namespace

Mesh4D step_mesh(const Mesh4D& m, double dt) {
  return step_mesh_impl(m, dt, true);
}
Mesh4D step_mesh_serial(const Mesh4D& m, double dt) {
  return step_mesh_impl(m, dt, false);
}

// ---------------------------------------------------------------------------
// curve engine

namespace {
Polyline step_polyline(const Polyline& p, double dt) {
  const int n = static_cast<int>(p.pts.size());
  if (n < (p.closed ? 4 : 3))
    fail(ErrorCode::PolylineCollapse, "step_curves: too few vertices");
  Polyline mid = p, out = p;
  for (int i = 0; i < n; ++i)
    mid.pts[i] = p.pts[i] + 0.5 * dt * p.curvature(i);
  for (int i = 0; i < n; ++i)
    out.pts[i] = p.pts[i] + dt * mid.curvature(i);
  for (const auto& q : out.pts)
    if (!q.allFinite())
      fail(ErrorCode::NonFinite, "step_curves: non-finite vertex");
  // hard floor: a factor collapsed to numerical zero
  if (p.closed && out.min_segment() < 1e-12)
    fail(ErrorCode::PolylineCollapse, "step_curves: factor collapsed");
  return out;
}
}  // namespace

CurveProduct step_curves(const CurveProduct& c, double dt) {
  const double h = std::min(c.g1.min_segment(), c.g2.min_segment());
  if (dt > 0.5 * h * h + 1e-15)
    fail(ErrorCode::CFLViolation, "step_curves: dt > min_segment^2/2");
  return {step_polyline(c.g1, dt), step_polyline(c.g2, dt)};
}

double natural_dt(const SurfaceState& s, double cfl) {
  struct {
    double cfl;
    double operator()(const PotentialGraph& g) const { return cfl * g.h * g.h; }
    double operator()(const Mesh4D& m) const {
      const double h = m.min_edge();
      return cfl * h * h;
    }
    double operator()(const CurveProduct& c) const {
      const double h = std::min(c.g1.min_segment(), c.g2.min_segment());
      return cfl * h * h;
    }
    double operator()(const TwoChartGraph&) const {
      fail(ErrorCode::DomainError,
           "two-chart states are initial data; convert with to_mesh()");
    }
  } v{cfl};
  return std::visit(v, s);
}

// ---------------------------------------------------------------------------
// run loop

namespace {
SurfaceState step_state(const SurfaceState& s, double dt, double t,
                        const RunMonitor& mon) {
  if (const auto* g = std::get_if<PotentialGraph>(&s))
    return step_potential(*g, dt, t, mon.potential_boundary);
  if (const auto* m = std::get_if<Mesh4D>(&s)) return step_mesh(*m, dt);
  if (const auto* c = std::get_if<CurveProduct>(&s))
    return step_curves(*c, dt);
  fail(ErrorCode::DomainError, "run: state type has no step engine");
}
}  // namespace

namespace {
std::function<double(const SurfaceState&)> effective_gauge(
    const RunMonitor& monitor, const SurfaceState& sample_state) {
  if (monitor.pinch_gauge) return monitor.pinch_gauge;
  if (std::holds_alternative<CurveProduct>(sample_state))
    return [](const SurfaceState& s) {
      const auto& c = std::get<CurveProduct>(s);
      double g = 1e300;
      for (const Polyline* p : {&c.g1, &c.g2}) {
        if (!p->closed) continue;
        Vec2 cen = Vec2::Zero();
        for (const auto& q : p->pts) cen += q;
        cen /= static_cast<double>(p->pts.size());
        double r2 = 0.0;
        for (const auto& q : p->pts) r2 += (q - cen).squaredNorm();
        g = std::min(g, std::sqrt(r2 / p->pts.size()));
      }
      return g;
    };
  return nullptr;
}

// Resume-safe integration: all pinch bookkeeping is derived from
// checkpoint-time data, so continuing from a saved checkpoint reproduces a
// straight-through run exactly.
void run_loop(FlowTrace& tr, SurfaceState cur, double t,
              const StepControl& ctl, const RunMonitor& monitor) {
  const double h0 = tr.h0;
  auto gauge_fn = effective_gauge(monitor, cur);
  const bool curves = std::holds_alternative<CurveProduct>(cur);

  double cp_gauge = std::numeric_limits<double>::quiet_NaN();
  double cp_gauge_t = t;
  auto checkpoint = [&]() {
    tr.times.push_back(t);
    tr.states.push_back(cur);
    if (monitor.channels) {
      tr.channel_times.push_back(t);
      tr.channel_rows.push_back(monitor.channels(t, cur));
    }
    if (gauge_fn) {
      const double g = gauge_fn(cur);
      if (curves) {
        tr.T_hat = t + 0.5 * g * g;  // circle law r^2 = r0^2 - 2t
      } else if (std::isfinite(cp_gauge) && g < cp_gauge && t > cp_gauge_t) {
        const double rate = (cp_gauge - g) / (t - cp_gauge_t);
        tr.T_hat = t + g / rate;
      }
      cp_gauge = g;
      cp_gauge_t = t;
    }
  };
  if (tr.times.empty() || tr.times.back() < t) checkpoint();
  else if (gauge_fn) {
    cp_gauge = gauge_fn(cur);
    cp_gauge_t = t;
  }

  double next_cp = t + ctl.checkpoint_dt;
  int remesh_count = 0;
  const double threshold =
      std::isfinite(ctl.pinch_threshold)
          ? ctl.pinch_threshold
          : (gauge_fn ? ctl.pinch_factor * h0 * h0
                      : std::numeric_limits<double>::quiet_NaN());

  for (long step = 0; step < ctl.max_steps && t < ctl.max_time; ++step) {
    double dt = std::min(natural_dt(cur, ctl.cfl), ctl.max_time - t);
    dt = std::min(dt, next_cp - t > 1e-14 ? next_cp - t : dt);
    try {
      SurfaceState next = step_state(cur, dt, t, monitor);
      cur = std::move(next);
      t += dt;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateTriangle &&
          remesh_count < ctl.max_remesh_events) {
        RemeshOptions opt;
        if (ctl.remesh_sizing)
          opt.sizing = ctl.remesh_sizing;
        else
          opt.target_edge = h0;
        opt.iterations = 3;
        cur = remesh(std::get<Mesh4D>(cur), opt);
        ++remesh_count;
        tr.events.push_back({t, "remesh", e.what()});
        continue;
      }
      if (e.code() == ErrorCode::PolylineCollapse) {
        tr.events.push_back({t, "pinch-detected", e.what()});
        checkpoint();
        return;
      }
      tr.events.push_back({t, "error", e.what()});
      checkpoint();
      return;
    }

    bool blown = false;
    if (const auto* m = std::get_if<Mesh4D>(&cur)) {
      for (const auto& v : m->vertices)
        if (v.norm() > ctl.blowup_guard) blown = true;
    }
    if (blown) {
      tr.events.push_back({t, "error", "blowup guard tripped"});
      break;
    }

    if (gauge_fn && gauge_fn(cur) < threshold) {
      tr.events.push_back({t, "pinch-detected", "gauge below threshold"});
      checkpoint();
      return;
    }

    if (t >= next_cp - 1e-14) {
      checkpoint();
      const bool warned = gauge_fn && std::isfinite(cp_gauge) &&
                          cp_gauge < 16.0 * threshold &&
                          ctl.refine_checkpoints_near_pinch;
      if (warned && std::isfinite(tr.T_hat) && tr.T_hat > t)
        next_cp = t + std::max((tr.T_hat - t) * 0.5, 1e-12);
      else
        next_cp = t + ctl.checkpoint_dt;
    }
  }
  tr.events.push_back({t, "stopped", "time or step limit"});
  if (tr.times.empty() || tr.times.back() < t) checkpoint();
}
}  // namespace

FlowTrace run(const SurfaceState& initial, const StepControl& ctl,
              const RunMonitor& monitor) {
  ctl.validate();
  FlowTrace tr;
  tr.channel_names = monitor.channel_names;
  SurfaceState cur =
      std::holds_alternative<TwoChartGraph>(initial)
          ? SurfaceState(std::get<TwoChartGraph>(initial).to_mesh())
          : initial;
  tr.h0 = state_resolution(cur);
  run_loop(tr, std::move(cur), 0.0, ctl, monitor);
  return tr;
}

FlowTrace run_resume(const FlowTrace& prefix, const StepControl& ctl,
                     const RunMonitor& monitor) {
  ctl.validate();
  if (prefix.times.empty())
    fail(ErrorCode::OutOfRange, "run_resume: empty prefix trace");
  FlowTrace tr = prefix;
  run_loop(tr, prefix.states.back(), prefix.times.back(), ctl, monitor);
  return tr;
}

// ---------------------------------------------------------------------------
// rescaling

SurfaceState rescale_state(const SurfaceState& s, const Vec4& x0,
                           double lambda) {
  if (!(lambda > 0.0))
    fail(ErrorCode::DomainError, "rescale_state: lambda must be positive");
  struct V {
    Vec4 x0;
    double l;
    SurfaceState operator()(const PotentialGraph& g) const {
      if (x0.norm() > 1e-14)
        fail(ErrorCode::OutOfRange,
             "rescale_state: graph states support x0 = 0 only");
      PotentialGraph out = g;
      out.h = l * g.h;
      for (int i = 0; i < g.side(); ++i)
        for (int j = 0; j < g.side(); ++j)
          out.f[out.idx(i, j)] = l * l * g.f[g.idx(i, j)];
      return out;
    }
    SurfaceState operator()(const TwoChartGraph& t) const {
      if (x0.norm() > 1e-14)
        fail(ErrorCode::OutOfRange,
             "rescale_state: graph states support x0 = 0 only");
      TwoChartGraph out = t;
      for (PolarGraph* g : {&out.chart1, &out.chart2}) {
        g->r_in *= l;
        g->r_out *= l;
        for (double& v : g->f) v *= l * l;
      }
      out.eps *= l * l;
      out.r_neck_out *= l;
      out.r_plane_in *= l;
      return out;
    }
    SurfaceState operator()(const Mesh4D& m) const {
      Mesh4D out = m;
      for (auto& v : out.vertices) v = l * (v - x0);
      return out;
    }
    SurfaceState operator()(const CurveProduct& c) const {
      CurveProduct out = c;
      const Vec2 c1(x0[0], x0[1]), c2(x0[2], x0[3]);
      for (auto& p : out.g1.pts) p = l * (p - c1);
      for (auto& p : out.g2.pts) p = l * (p - c2);
      return out;
    }
  } v{x0, lambda};
  return std::visit(v, s);
}

SurfaceState rescale_view(const FlowTrace& trace, const Vec4& x0, double t0,
                          double tau) {
  const double t = t0 - std::exp(-tau);
  const SurfaceState s = trace.state_at(t);  // OutOfRange if outside
  return rescale_state(s, x0, std::exp(tau / 2.0));
}

}  // namespace lmcf
