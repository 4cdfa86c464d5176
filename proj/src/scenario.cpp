#include "lmcf/scenario.hpp"

#include <chrono>
#include <fstream>
#include <nlohmann/json.hpp>

#include "lmcf/diagnostics.hpp"
#include "lmcf/drift.hpp"
#include "lmcf/parallel.hpp"

namespace lmcf::lab {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config

namespace {
std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::string section;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string line =
        text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(ErrorCode::ConfigError,
             "config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::ConfigError,
           "config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      fail(ErrorCode::ConfigError,
           "config line " + std::to_string(lineno) + ": empty key or value");
    if (!section.empty()) key = section + "." + key;
    cfg.values_[key] = val;
  }
  return cfg;
}

Config Config::parse_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) fail(ErrorCode::ConfigError, "cannot open config " + p.string());
  std::string text((std::istreambuf_iterator<char>(f)), {});
  return parse(text);
}

double Config::num(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str())
    fail(ErrorCode::ConfigError, "config key " + key + ": not a number");
  return v;
}

int Config::integer(const std::string& key, int fallback) const {
  return static_cast<int>(num(key, fallback));
}

bool Config::flag(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true") return true;
  if (it->second == "false") return false;
  fail(ErrorCode::ConfigError, "config key " + key + ": expected true/false");
}

std::string Config::str(const std::string& key,
                        const std::string& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = it->second;
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
    v = v.substr(1, v.size() - 2);
  return v;
}

std::vector<double> Config::array(const std::string& key,
                                  std::vector<double> fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    fail(ErrorCode::ConfigError, "config key " + key + ": expected [array]");
  std::vector<double> out;
  std::size_t pos = 1;
  while (pos < v.size() - 1) {
    auto c = v.find(',', pos);
    if (c == std::string::npos || c > v.size() - 1) c = v.size() - 1;
    const std::string tok = trim(v.substr(pos, c - pos));
    if (!tok.empty()) out.push_back(std::strtod(tok.c_str(), nullptr));
    pos = c + 1;
  }
  return out;
}

json Config::echo() const {
  json j;
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

// ---------------------------------------------------------------------------
// shared channel machinery

namespace {

struct ChannelKit {
  std::vector<std::string> names;
  std::vector<std::function<double(double, const SurfaceState&)>> fns;

  void add(const std::string& n,
           std::function<double(double, const SurfaceState&)> f) {
    names.push_back(n);
    fns.push_back(std::move(f));
  }
  RunMonitor monitor() const {
    RunMonitor m;
    m.channel_names = names;
    auto fns_copy = fns;
    m.channels = [fns_copy](double t, const SurfaceState& s) {
      std::vector<double> row;
      row.reserve(fns_copy.size());
      for (const auto& f : fns_copy) row.push_back(f(t, s));
      return row;
    };
    return m;
  }
};

double max_vertex_displacement(const SurfaceState& s, const SurfaceState& s0) {
  if (const auto* m = std::get_if<Mesh4D>(&s)) {
    const auto& m0 = std::get<Mesh4D>(s0);
    double d = 0.0;
    if (m->nv() != m0.nv()) return std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < m->nv(); ++i)
      d = std::max(d, (m->vertices[i] - m0.vertices[i]).norm());
    return d;
  }
  if (const auto* g = std::get_if<PotentialGraph>(&s)) {
    const auto& g0 = std::get<PotentialGraph>(s0);
    double d = 0.0;
    for (std::size_t i = 0; i < g->f.size(); ++i)
      d = std::max(d, std::abs(g->f[i] - g0.f[i]));
    return d;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

void add_gaussian_channels(ChannelKit& kit, double t0_density) {
  kit.add("gaussian_density", [t0_density](double t, const SurfaceState& s) {
    return gaussian_density(embed(s), Vec4::Zero(), t0_density - t);
  });
  kit.add("entropy", [](double, const SurfaceState& s) {
    auto samples = embed(s);
    return entropy(samples, EntropyGrid::build(samples, 5, 10, 0.05, 20.0));
  });
}

double theta_oscillation(const SampleList& samples, double r_lo, double r_hi) {
  double cs = 0.0, sn = 0.0;
  for (const auto& s : samples) {
    const double r = s.x.norm();
    if (r < r_lo || r > r_hi) continue;
    cs += std::cos(s.theta);
    sn += std::sin(s.theta);
  }
  const double center = std::atan2(sn, cs);
  double lo = 0.0, hi = 0.0;
  for (const auto& s : samples) {
    const double r = s.x.norm();
    if (r < r_lo || r > r_hi) continue;
    const double d = angle_diff(s.theta, center);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return hi - lo;
}

json trace_summary(const FlowTrace& tr) {
  json s;
  s["checkpoints"] = tr.times.size();
  s["t_final"] = tr.times.empty() ? 0.0 : tr.times.back();
  s["T_hat"] = std::isfinite(tr.T_hat) ? json(tr.T_hat) : json(nullptr);
  json ev = json::array();
  for (const auto& e : tr.events)
    ev.push_back({{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}});
  s["events"] = ev;
  for (std::size_t c = 0; c < tr.channel_names.size(); ++c) {
    double mx = -1e300, mn = 1e300, last = 0.0;
    for (std::size_t i = 0; i < tr.channel_rows.size(); ++i) {
      mx = std::max(mx, tr.channel_rows[i][c]);
      mn = std::min(mn, tr.channel_rows[i][c]);
      last = tr.channel_rows[i][c];
    }
    s["channels"][tr.channel_names[c]] = {
        {"max", mx}, {"min", mn}, {"final", last}};
  }
  return s;
}

// ---------------------------------------------------------------------------
// scenarios

ScenarioResult run_s1(const Config& cfg) {
  const int n = cfg.integer("s1.n", 30);
  const double h = cfg.num("s1.h", 0.08);
  auto plane = standard_pair().p1;
  SurfaceState init = PotentialGraph::zero(plane, n, h);
  StepControl ctl;
  ctl.max_time = cfg.num("s1.max_time", 0.2);
  ctl.checkpoint_dt = cfg.num("s1.checkpoint_dt", 0.02);
  ChannelKit kit;
  SurfaceState init_copy = init;
  kit.add("max_displacement", [init_copy](double, const SurfaceState& s) {
    return max_vertex_displacement(s, init_copy);
  });
  add_gaussian_channels(kit, 1.2 * ctl.max_time + 0.5);
  auto tr = run(init, ctl, kit.monitor());
  json sum = trace_summary(tr);
  sum["max_displacement"] = sum["channels"]["max_displacement"]["max"];
  return {std::move(tr), sum};
}

ScenarioResult run_s2(const Config& cfg) {
  const double eps = cfg.num("s2.eps", 0.2);
  const double R = cfg.num("s2.r_out", 3.0);
  const int nr = cfg.integer("s2.nr", 44);
  const int nphi = cfg.integer("s2.nphi", 56);
  auto t = TwoChartGraph::lawlor_glued(standard_pair(), eps, R, nr, nphi,
                                       cfg.num("s2.r1", 1.2),
                                       cfg.num("s2.r2", 2.2));
  Mesh4D mesh = t.to_mesh();
  mesh.validate();
  SurfaceState init = mesh;
  StepControl ctl;
  ctl.max_time = cfg.num("s2.max_time", 0.1);
  ctl.checkpoint_dt = cfg.num("s2.checkpoint_dt", 0.01);
  ChannelKit kit;
  SurfaceState init_copy = init;
  kit.add("max_displacement", [init_copy](double, const SurfaceState& s) {
    return max_vertex_displacement(s, init_copy);
  });
  kit.add("omega_defect_max", [](double, const SurfaceState& s) {
    return std::get<Mesh4D>(s).max_omega_defect(
        CalibratedStructure::standard());
  });
  add_gaussian_channels(kit, 1.2 * ctl.max_time + 0.5);
  auto tr = run(init, ctl, kit.monitor());
  json sum = trace_summary(tr);
  sum["max_displacement"] = sum["channels"]["max_displacement"]["max"];
  sum["h_max_edge"] = mesh.max_edge();
  sum["displacement_bound_5h2"] = 5.0 * std::pow(mesh.max_edge(), 2);
  return {std::move(tr), sum};
}

ScenarioResult run_s3(const Config& cfg) {
  const int n = cfg.integer("s3.n", 256);
  CurveProduct c{Polyline::circle(cfg.num("s3.r1", 1.0), n),
                 Polyline::circle(cfg.num("s3.r2", 1.0), n)};
  StepControl ctl;
  ctl.max_time = cfg.num("s3.max_time", 0.6);
  ctl.checkpoint_dt = cfg.num("s3.checkpoint_dt", 0.02);
  ChannelKit kit;
  auto rms = [](const Polyline& p) {
    double r = 0.0;
    for (const auto& q : p.pts) r += q.squaredNorm();
    return std::sqrt(r / p.pts.size());
  };
  kit.add("r1", [rms](double, const SurfaceState& s) {
    return rms(std::get<CurveProduct>(s).g1);
  });
  kit.add("r2", [rms](double, const SurfaceState& s) {
    return rms(std::get<CurveProduct>(s).g2);
  });
  add_gaussian_channels(kit, 1.2 * ctl.max_time + 0.5);
  auto tr = run(SurfaceState(c), ctl, kit.monitor());
  json sum = trace_summary(tr);
  sum["pinch_time"] =
      std::isfinite(tr.T_hat) ? json(tr.T_hat) : json(nullptr);
  return {std::move(tr), sum};
}

ScenarioResult run_s4(const Config& cfg) {
  const PlanePair V0 = standard_pair();
  const double eps = cfg.num("s4.eps", 0.04);
  const double R = cfg.num("s4.r_out", 2.0);
  const double r1 = cfg.num("s4.r1", 0.45), r2 = cfg.num("s4.r2", 1.2);
  const double bump_amp = cfg.num("s4.bump", -0.02);
  const double bump_r = cfg.num("s4.bump_r", 0.8);
  const double bump_w = cfg.num("s4.bump_w", 0.3);
  const int nr = cfg.integer("s4.nr", 48), nphi = cfg.integer("s4.nphi", 64);
  const double h_floor = cfg.num("s4.h_floor", 0.004);

  auto bump = [=](double r, double phi) {
    (void)phi;
    return bump_amp * std::exp(-std::pow((r - bump_r) / bump_w, 2));
  };
  auto t = TwoChartGraph::lawlor_glued(V0, eps, R, nr, nphi, r1, r2, bump);
  const NeckCoordinates nc = t.nc;
  Mesh4D mesh = t.to_mesh();
  mesh.validate();

  StepControl ctl;
  ctl.max_time = cfg.num("s4.max_time", 8.0);
  ctl.checkpoint_dt = cfg.num("s4.checkpoint_dt", 0.02);
  ctl.pinch_threshold = 10.0 * h_floor * h_floor;
  ctl.remesh_sizing = [h_floor](const Vec4& x) {
    return std::clamp(0.15 * x.norm(), h_floor, 0.25);
  };
  RunMonitor mon;
  // neck gauge: min over vertices of max(|z|, |w|)^2; on the neck this is
  // the |zw| parameter, bounded away from 0 on the planes until they touch
  auto gauge = [nc](const SurfaceState& s) {
    const auto& m = std::get<Mesh4D>(s);
    double g = 1e300;
    for (const auto& v : m.vertices) {
      const double m2 =
          std::pow(std::max(std::abs(nc.z(v)), std::abs(nc.w(v))), 2);
      g = std::min(g, m2);
    }
    return g;
  };
  mon.pinch_gauge = gauge;
  ChannelKit kit;
  kit.add("neck_gauge", [gauge](double, const SurfaceState& s) {
    return gauge(s);
  });
  kit.add("r_neck", [gauge](double, const SurfaceState& s) {
    return std::sqrt(2.0 * gauge(s));  // |x|-scale of the core circle
  });
  kit.add("eps_fit", [nc](double, const SurfaceState& s) {
    const auto& m = std::get<Mesh4D>(s);
    auto samples = embed(m);
    double g = 1e300;
    for (const auto& v : m.vertices)
      g = std::min(g, std::pow(
                          std::max(std::abs(nc.z(v)), std::abs(nc.w(v))), 2));
    const double fit_r = 3.0 * std::sqrt(2.0 * std::sqrt(g));
    try {
      return lawlor_fit(samples, nc, fit_r).eps.real();
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  });
  kit.add("lawlor_residual", [nc](double, const SurfaceState& s) {
    const auto& m = std::get<Mesh4D>(s);
    auto samples = embed(m);
    double g = 1e300;
    for (const auto& v : m.vertices)
      g = std::min(g, std::pow(
                          std::max(std::abs(nc.z(v)), std::abs(nc.w(v))), 2));
    const double fit_r = 3.0 * std::sqrt(2.0 * std::sqrt(g));
    try {
      return lawlor_fit(samples, nc, fit_r).residual;
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  });
  kit.add("omega_defect_max", [](double, const SurfaceState& s) {
    return std::get<Mesh4D>(s).max_omega_defect(
        CalibratedStructure::standard());
  });
  kit.add("min_edge", [](double, const SurfaceState& s) {
    return std::get<Mesh4D>(s).min_edge();
  });
  add_gaussian_channels(kit, 1.2 * ctl.max_time + 0.5);
  RunMonitor merged = kit.monitor();
  merged.pinch_gauge = mon.pinch_gauge;

  auto tr = run(SurfaceState(mesh), ctl, merged);
  json sum = trace_summary(tr);
  bool pinch = false;
  for (const auto& e : tr.events) pinch |= e.kind == "pinch-detected";
  sum["pinch_detected"] = pinch;
  sum["eps0"] = eps;
  sum["h_floor"] = h_floor;
  return {std::move(tr), sum};
}

ScenarioResult run_s5(const Config& cfg) {
  const PlanePair V0 = standard_pair();
  const double delta = cfg.num("s5.delta", 0.05);
  const int nr = cfg.integer("s5.nr", 72), nphi = cfg.integer("s5.nphi", 48);
  auto mode = [&](double r, double phi) {
    return delta * std::exp(-std::pow((r - 1.2) / 0.45, 2)) * std::cos(2 * phi);
  };
  auto t = TwoChartGraph::planes_only(V0, cfg.num("s5.r_in", 0.05),
                                      cfg.num("s5.r_out", 3.0), nr, nphi);
  t.chart1 = PolarGraph::make(V0.p1, t.chart1.r_in, t.chart1.r_out, nr, nphi,
                              mode);
  t.chart2 = PolarGraph::make(V0.p2, t.chart2.r_in, t.chart2.r_out, nr, nphi,
                              mode);
  Mesh4D mesh = t.to_mesh();
  mesh.validate();
  StepControl ctl;
  ctl.max_time = cfg.num("s5.max_time", 0.4);
  ctl.checkpoint_dt = cfg.num("s5.checkpoint_dt", 0.01);
  ChannelKit kit;
  kit.add("I_V0", [V0](double, const SurfaceState& s) {
    return dist_IV(embed(s), V0);
  });
  add_gaussian_channels(kit, 1.2 * ctl.max_time + 0.5);
  auto tr = run(SurfaceState(mesh), ctl, kit.monitor());
  json sum = trace_summary(tr);
  return {std::move(tr), sum};
}

ScenarioResult run_s6(const Config& cfg) {
  // synthetic excess-vs-distance family; no flow involved
  const PlanePair V0 = standard_pair();
  auto targets = cfg.array("s6.d", {1e-3, 3e-3, 1e-2, 3e-2, 1e-1});
  // the inner hole must carry negligible gaussian mass: 2 pi r_in^2 well
  // below the smallest |A| in the family
  const double r_in = cfg.num("s6.r_in", 1e-3);
  const int nr = cfg.integer("s6.nr", 320), nphi = cfg.integer("s6.nphi", 64);
  auto mode = [](double r, double phi) {
    return std::exp(-std::pow((r - 1.4) / 0.5, 2)) * std::cos(2 * phi);
  };
  auto family = [&](double c) {
    auto f = [&](double r, double phi) { return c * mode(r, phi); };
    auto t = TwoChartGraph::planes_only(V0, r_in, 12.0, nr, nphi);
    t.chart1 = PolarGraph::make(V0.p1, r_in, 12.0, nr, nphi, f);
    t.chart2 = PolarGraph::make(V0.p2, r_in, 12.0, nr, nphi, f);
    return t;
  };
  // calibrate: D_V is linear in c in this regime
  const double d_unit = dist_DV(embed(family(1e-3)), V0).D_V / 1e-3;
  json rows = json::array();
  FlowTrace tr;  // family members stored as pseudo-checkpoints
  double tfake = 0.0;
  for (double d : targets) {
    const double c = d / d_unit;
    auto st = family(c);
    auto samples = embed(st);
    auto dr = dist_DV(samples, V0);
    auto er = excess(samples, 0.5, TailSpec{4 * kPi, 0, true});
    rows.push_back({{"d_target", d},
                    {"D_V", dr.D_V_infinite ? json("inf") : json(dr.D_V)},
                    {"excess", er.excess},
                    {"abs_excess", std::abs(er.excess)},
                    {"bound_d_1_1", std::pow(d, 1.1)}});
    tr.times.push_back(tfake);
    tr.states.push_back(st);
    tfake += 1.0;
  }
  json sum;
  sum["family"] = rows;
  return {std::move(tr), sum};
}

ScenarioResult run_s7(const Config& cfg) {
  // non-special pair: angle gap via the u01-mode tilt
  const double a = cfg.num("s7.tilt", 0.05);
  const PlanePair V0 = standard_pair();
  Mat2 plus = a * Mat2::Identity(), minus = -a * Mat2::Identity();
  const PlanePair W =
      PlanePair::make(plane_graph(V0.p1, plus), plane_graph(V0.p2, minus));
  const double gap = std::abs(angle_diff(W.theta1, W.theta2));
  auto t = TwoChartGraph::planes_only(W, cfg.num("s7.r_in", 0.05),
                                      cfg.num("s7.r_out", 3.0),
                                      cfg.integer("s7.nr", 72),
                                      cfg.integer("s7.nphi", 48));
  Mesh4D mesh = t.to_mesh();
  StepControl ctl;
  ctl.max_time = cfg.num("s7.max_time", 0.3);
  ctl.checkpoint_dt = cfg.num("s7.checkpoint_dt", 0.01);
  ChannelKit kit;
  kit.add("theta_osc", [](double, const SurfaceState& s) {
    return theta_oscillation(embed(s), 0.5, 2.0);
  });
  add_gaussian_channels(kit, 1.2 * ctl.max_time + 0.5);
  auto tr = run(SurfaceState(mesh), ctl, kit.monitor());
  json sum = trace_summary(tr);
  sum["angle_gap"] = gap;
  return {std::move(tr), sum};
}

}  // namespace

const std::vector<Scenario>& scenarios() {
  static const std::vector<Scenario> list = {
      {"s1-static-plane", "flat potential graph; nothing should move",
       run_s1},
      {"s2-static-lawlor", "Lawlor neck zw=eps under the mesh engine",
       run_s2},
      {"s3-circle-product", "product of shrinking circles; exact pinch",
       run_s3},
      {"s4-lawlor-pinch",
       "Lawlor neck glued to planes; neck pinches off under mesh flow",
       run_s4},
      {"s5-decay-probe",
       "perturbed pair converging back to the cone; decay diagnostics",
       run_s5},
      {"s6-excess-distance",
       "synthetic near-cone family for the excess-distance inequality",
       run_s6},
      {"s7-angle-gap",
       "non-special pair; theta oscillation stays bounded below", run_s7},
  };
  return list;
}

const Scenario& find_scenario(const std::string& name) {
  for (const auto& s : scenarios())
    if (s.name == name) return s;
  fail(ErrorCode::ConfigError, "unknown scenario " + name);
}

json cli_run(const Config& cfg, const std::filesystem::path& out_dir) {
  const std::string name = cfg.str("scenario", "");
  if (name.empty())
    fail(ErrorCode::ConfigError, "config needs scenario = \"<name>\"");
  const Scenario& sc = find_scenario(name);
  auto res = sc.run(cfg);
  std::filesystem::create_directories(out_dir);
  io::save_trace(res.trace, out_dir / "trace", cfg.echo());
  res.summary["scenario"] = name;
  res.summary["code_version"] = io::code_version();
  res.summary["config_hash"] = io::config_hash(cfg.echo());
  std::ofstream(out_dir / "summary.json") << res.summary.dump(1) << "\n";
  // channel plots
  if (!res.trace.channel_names.empty()) {
    std::vector<io::SvgSeries> series;
    for (std::size_t c = 0; c < res.trace.channel_names.size(); ++c) {
      io::SvgSeries s;
      s.label = res.trace.channel_names[c];
      for (std::size_t i = 0; i < res.trace.channel_times.size(); ++i) {
        s.x.push_back(res.trace.channel_times[i]);
        s.y.push_back(res.trace.channel_rows[i][c]);
      }
      series.push_back(std::move(s));
    }
    io::write_svg_chart(out_dir / "channels.svg", series, name, false);
    io::write_svg_chart(out_dir / "channels_log.svg", series, name + " (log)",
                        true);
  }
  return res.summary;
}

json cli_diag(const std::filesystem::path& trace_dir, const Config& cfg,
              const std::filesystem::path& out_dir) {
  FlowTrace tr = io::load_trace(trace_dir);
  const PlanePair V = cfg.has("diag.pair")
                          ? io::pair_from_json(
                                json::parse(cfg.str("diag.pair", "")))
                          : standard_pair();
  json out;
  out["code_version"] = io::code_version();
  const double t0 = cfg.num("diag.t0",
                            std::isfinite(tr.T_hat) ? tr.T_hat
                                                    : tr.times.back() + 0.1);
  std::vector<double> taus = cfg.array("diag.tau", {});
  SurfaceState view = tr.states.back();
  if (!taus.empty()) {
    json sweeps = json::array();
    for (double tau : taus) {
      json row;
      row["tau"] = tau;
      try {
        view = rescale_view(tr, Vec4::Zero(), t0, tau);
        auto samples = embed(view);
        row["excess"] = io::to_json(excess(samples, cfg.num("diag.alpha", 0.5)));
        if (V.special) row["distance"] = io::to_json(dist_DV(samples, V));
      } catch (const Error& e) {
        row["error"] = e.what();
      }
      sweeps.push_back(row);
    }
    out["tau_sweep"] = sweeps;
  } else {
    auto samples = embed(view);
    out["excess"] = io::to_json(excess(samples, cfg.num("diag.alpha", 0.5)));
    if (V.special) {
      out["distance"] = io::to_json(dist_DV(samples, V));
      const NeckCoordinates nc = neck_coordinates(V);
      try {
        auto fit = lawlor_fit(samples, nc, cfg.num("diag.fit_radius", 2.0));
        out["neck"] = io::to_json(fit, cfg.num("diag.fit_radius", 2.0),
                                  Vec4::Zero(), 0.0, 0.0, 0.0);
      } catch (const Error& e) {
        out["neck"] = {{"error", e.what()}};
      }
    }
  }
  std::filesystem::create_directories(out_dir);
  std::ofstream(out_dir / "diag.json") << out.dump(1) << "\n";
  // optional per-sample CSV
  if (cfg.flag("diag.samples_csv", false)) {
    auto samples = embed(view);
    std::ofstream f(out_dir / "samples.csv");
    f << "x1,y1,x2,y2,theta,dA\n";
    for (const auto& s : samples) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    s.x[0], s.x[1], s.x[2], s.x[3], s.theta, s.dA);
      f << buf;
    }
  }
  return out;
}

json VerifyReport::to_json() const {
  json checks_j = json::array();
  for (const auto& c : checks)
    checks_j.push_back({{"name", c.name},
                        {"pass", c.pass},
                        {"measured", c.measured},
                        {"bound", c.bound},
                        {"note", c.note}});
  return {{"suite", suite},
          {"pass", pass()},
          {"seconds", seconds},
          {"checks", checks_j},
          {"code_version", io::code_version()}};
}

}  // namespace lmcf::lab
