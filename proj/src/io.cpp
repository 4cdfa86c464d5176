#include "lmcf/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

namespace lmcf::io {

std::string code_version() { return "lmcf-lab 1.0"; }

namespace {
json vec4_json(const Vec4& v) { return json::array({v[0], v[1], v[2], v[3]}); }
Vec4 vec4_from(const json& j) {
  return Vec4(j.at(0).get<double>(), j.at(1).get<double>(),
              j.at(2).get<double>(), j.at(3).get<double>());
}

void write_doubles(const fs::path& p, const std::vector<double>& v) {
  std::ofstream f(p, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot write " + p.string());
  f.write(reinterpret_cast<const char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(const fs::path& p, std::size_t count) {
  std::ifstream f(p, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot read " + p.string());
  std::vector<double> v(count);
  f.read(reinterpret_cast<char*>(v.data()),
         static_cast<std::streamsize>(count * sizeof(double)));
  if (!f) fail(ErrorCode::IoError, "short read from " + p.string());
  return v;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

json to_json(const CalibratedStructure& s) {
  return {{"version", kSchemaVersion},
          {"kind", s.is_rotated() ? "rotated" : "standard"},
          {"rotation_phase", s.rotation_phase()}};
}

CalibratedStructure structure_from_json(const json& j) {
  if (j.at("kind") == "standard") return CalibratedStructure::standard();
  return CalibratedStructure::rotated(j.at("rotation_phase").get<double>());
}

json to_json(const PlanePair& V) {
  return {{"version", kSchemaVersion},
          {"p1", {vec4_json(V.p1.e1()), vec4_json(V.p1.e2())}},
          {"p2", {vec4_json(V.p2.e1()), vec4_json(V.p2.e2())}},
          {"theta1", V.theta1},
          {"theta2", V.theta2},
          {"gamma_min", V.gamma_min},
          {"special", V.special},
          {"theta_V", V.theta_V}};
}

PlanePair pair_from_json(const json& j) {
  auto plane = [&](const json& p) {
    Frame42 f;
    f.col(0) = vec4_from(p.at(0));
    f.col(1) = vec4_from(p.at(1));
    return LagrangianPlane::from_frame_unchecked(f);
  };
  return PlanePair::make(plane(j.at("p1")), plane(j.at("p2")));
}

// ---------------------------------------------------------------------------
// states

namespace {
json doubles_to_json_or_bin(const std::vector<double>& v, const fs::path& bin,
                            json& j, const char* key) {
  if (bin.empty()) {
    j[key] = v;
  } else {
    write_doubles(bin, v);
    j[key] = {{"bin", bin.filename().string()}, {"count", v.size()}};
  }
  return j;
}

std::vector<double> doubles_from_json(const json& j, const fs::path& dir) {
  if (j.is_array()) return j.get<std::vector<double>>();
  return read_doubles(dir / j.at("bin").get<std::string>(),
                      j.at("count").get<std::size_t>());
}
}  // namespace

json state_to_json(const SurfaceState& s, const fs::path& bin) {
  json j;
  j["version"] = kSchemaVersion;
  if (const auto* g = std::get_if<PotentialGraph>(&s)) {
    j["type"] = "potential_graph";
    j["base"] = {vec4_json(g->base.e1()), vec4_json(g->base.e2())};
    j["n"] = g->n;
    j["h"] = g->h;
    doubles_to_json_or_bin(g->f, bin, j, "f");
  } else if (const auto* m = std::get_if<Mesh4D>(&s)) {
    j["type"] = "mesh4d";
    j["faces"] = m->faces;
    std::vector<double> flat(static_cast<std::size_t>(m->nv()) * 4);
    for (int i = 0; i < m->nv(); ++i)
      for (int k = 0; k < 4; ++k) flat[4 * i + k] = m->vertices[i][k];
    doubles_to_json_or_bin(flat, bin, j, "vertices");
  } else if (const auto* c = std::get_if<CurveProduct>(&s)) {
    j["type"] = "curve_product";
    for (int q = 0; q < 2; ++q) {
      const Polyline& p = q == 0 ? c->g1 : c->g2;
      json pj;
      pj["closed"] = p.closed;
      std::vector<double> flat(p.pts.size() * 2);
      for (std::size_t i = 0; i < p.pts.size(); ++i) {
        flat[2 * i] = p.pts[i][0];
        flat[2 * i + 1] = p.pts[i][1];
      }
      pj["pts"] = flat;
      j[q == 0 ? "g1" : "g2"] = pj;
    }
  } else if (const auto* t = std::get_if<TwoChartGraph>(&s)) {
    j["type"] = "two_chart_graph";
    j["V"] = to_json(t->V);
    auto chart = [&](const PolarGraph& g, const std::string& name) {
      json cj;
      cj["base"] = {vec4_json(g.base.e1()), vec4_json(g.base.e2())};
      cj["r_in"] = g.r_in;
      cj["r_out"] = g.r_out;
      cj["nr"] = g.nr;
      cj["nphi"] = g.nphi;
      cj["f"] = g.f;
      j[name] = cj;
    };
    chart(t->chart1, "chart1");
    chart(t->chart2, "chart2");
    j["has_neck"] = t->has_neck;
    j["eps"] = {t->eps.real(), t->eps.imag()};
    j["r_neck_out"] = t->r_neck_out;
    j["r_plane_in"] = t->r_plane_in;
    j["neck_nr"] = t->neck_nr;
    j["neck_nphi"] = t->neck_nphi;
    j["psi"] = t->psi;
  }
  return j;
}

SurfaceState state_from_json(const json& j, const fs::path& dir) {
  const std::string type = j.at("type");
  auto plane = [&](const json& p) {
    Frame42 f;
    f.col(0) = vec4_from(p.at(0));
    f.col(1) = vec4_from(p.at(1));
    return LagrangianPlane::from_frame_unchecked(f);
  };
  if (type == "potential_graph") {
    PotentialGraph g;
    g.base = plane(j.at("base"));
    g.n = j.at("n").get<int>();
    g.h = j.at("h").get<double>();
    g.f = doubles_from_json(j.at("f"), dir);
    return g;
  }
  if (type == "mesh4d") {
    Mesh4D m;
    m.faces = j.at("faces").get<std::vector<std::array<int, 3>>>();
    auto flat = doubles_from_json(j.at("vertices"), dir);
    m.vertices.resize(flat.size() / 4);
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
      m.vertices[i] = Vec4(flat[4 * i], flat[4 * i + 1], flat[4 * i + 2],
                           flat[4 * i + 3]);
    m.finalize();
    return m;
  }
  if (type == "curve_product") {
    CurveProduct c;
    for (int q = 0; q < 2; ++q) {
      const json& pj = j.at(q == 0 ? "g1" : "g2");
      Polyline& p = q == 0 ? c.g1 : c.g2;
      p.closed = pj.at("closed").get<bool>();
      auto flat = pj.at("pts").get<std::vector<double>>();
      p.pts.resize(flat.size() / 2);
      for (std::size_t i = 0; i < p.pts.size(); ++i)
        p.pts[i] = Vec2(flat[2 * i], flat[2 * i + 1]);
    }
    return c;
  }
  if (type == "two_chart_graph") {
    TwoChartGraph t;
    t.V = pair_from_json(j.at("V"));
    t.nc = neck_coordinates(t.V);
    auto chart = [&](const json& cj) {
      PolarGraph g;
      g.base = plane(cj.at("base"));
      g.r_in = cj.at("r_in").get<double>();
      g.r_out = cj.at("r_out").get<double>();
      g.nr = cj.at("nr").get<int>();
      g.nphi = cj.at("nphi").get<int>();
      g.f = cj.at("f").get<std::vector<double>>();
      return g;
    };
    t.chart1 = chart(j.at("chart1"));
    t.chart2 = chart(j.at("chart2"));
    t.has_neck = j.at("has_neck").get<bool>();
    t.eps = cplx(j.at("eps").at(0).get<double>(), j.at("eps").at(1).get<double>());
    t.r_neck_out = j.at("r_neck_out").get<double>();
    t.r_plane_in = j.at("r_plane_in").get<double>();
    t.neck_nr = j.at("neck_nr").get<int>();
    t.neck_nphi = j.at("neck_nphi").get<int>();
    t.psi = j.at("psi").get<std::vector<double>>();
    return t;
  }
  fail(ErrorCode::IoError, "unknown state type " + type);
}

// ---------------------------------------------------------------------------
// reports

json to_json(const ExcessReport& r) {
  return {{"version", kSchemaVersion},
          {"gaussian_area", r.gaussian_area},
          {"plane_pair_reference", r.plane_pair_reference},
          {"theta0_star", r.theta0_star},
          {"theta_l2_term", r.theta_l2_term},
          {"excess", r.excess},
          {"alpha", r.alpha},
          {"excess_alpha", r.excess_alpha},
          {"tail_bound", r.tail_bound},
          {"quad_error", r.quad_error}};
}

json to_json(const DistanceReport& r) {
  json j = {{"version", kSchemaVersion},
            {"I_V", r.I_V},
            {"graphical", r.graphical},
            {"sup_u", r.sup_u},
            {"sup_grad_u", r.sup_grad_u},
            {"dv_max", r.dv_max},
            {"zw_min", r.zw_min}};
  if (r.D_V_infinite)
    j["D_V"] = "inf";
  else
    j["D_V"] = r.D_V;
  return j;
}

json to_json(const LawlorFit& f, double scale_r, const Vec4& center,
             double lambda_min, double lambda_max, double residual_note) {
  return {{"version", kSchemaVersion},
          {"eps", {f.eps.real(), f.eps.imag()}},
          {"sign", f.sign},
          {"residual", f.residual},
          {"scale_r", scale_r},
          {"center", vec4_json(center)},
          {"lambda_min", lambda_min},
          {"lambda_max", lambda_max},
          {"note", residual_note}};
}

// ---------------------------------------------------------------------------
// OFF4

void write_off4(const Mesh4D& m, const fs::path& path) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot write " + path.string());
  f << "OFF4\n" << m.nv() << " " << m.nf() << " 0\n";
  for (const auto& v : m.vertices)
    f << fmt17(v[0]) << " " << fmt17(v[1]) << " " << fmt17(v[2]) << " "
      << fmt17(v[3]) << "\n";
  for (const auto& fa : m.faces)
    f << "3 " << fa[0] << " " << fa[1] << " " << fa[2] << "\n";
}

Mesh4D read_off4(const fs::path& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot read " + path.string());
  std::string magic;
  f >> magic;
  if (magic != "OFF4") fail(ErrorCode::IoError, "not an OFF4 file");
  int nv = 0, nf = 0, ne = 0;
  f >> nv >> nf >> ne;
  Mesh4D m;
  m.vertices.resize(nv);
  for (auto& v : m.vertices) f >> v[0] >> v[1] >> v[2] >> v[3];
  m.faces.resize(nf);
  for (auto& fa : m.faces) {
    int k;
    f >> k >> fa[0] >> fa[1] >> fa[2];
    if (k != 3) fail(ErrorCode::IoError, "OFF4: only triangles supported");
  }
  if (!f) fail(ErrorCode::IoError, "OFF4: truncated file");
  m.finalize();
  return m;
}

// ---------------------------------------------------------------------------
// trace persistence

void save_trace(const FlowTrace& tr, const fs::path& dir,
                const json& config_echo) {
  fs::create_directories(dir);
  json man;
  man["version"] = kSchemaVersion;
  man["code_version"] = code_version();
  man["config"] = config_echo;
  man["config_hash"] = config_hash(config_echo);
  man["times"] = tr.times;
  man["h0"] = tr.h0;
  man["T_hat"] = std::isfinite(tr.T_hat) ? json(tr.T_hat) : json(nullptr);
  json events = json::array();
  for (const auto& e : tr.events)
    events.push_back({{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}});
  man["events"] = events;
  man["channel_names"] = tr.channel_names;
  std::vector<std::string> files;
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "cp_%04zu", i);
    const fs::path bin = dir / (std::string(name) + ".bin");
    json sj = state_to_json(tr.states[i], bin);
    sj["t"] = tr.times[i];
    std::ofstream(dir / (std::string(name) + ".json")) << sj.dump(1) << "\n";
    files.push_back(name);
  }
  man["checkpoints"] = files;
  std::ofstream(dir / "manifest.json") << man.dump(1) << "\n";
  write_csv(dir / "channels.csv", tr.channel_names, tr.channel_times,
            tr.channel_rows);
}

FlowTrace load_trace(const fs::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) fail(ErrorCode::IoError, "no manifest in " + dir.string());
  json man = json::parse(mf);
  FlowTrace tr;
  tr.times = man.at("times").get<std::vector<double>>();
  tr.h0 = man.value("h0", 0.0);
  if (!man.at("T_hat").is_null()) tr.T_hat = man.at("T_hat").get<double>();
  for (const auto& e : man.at("events"))
    tr.events.push_back({e.at("t").get<double>(),
                         e.at("kind").get<std::string>(),
                         e.at("detail").get<std::string>()});
  tr.channel_names = man.at("channel_names").get<std::vector<std::string>>();
  for (const auto& name : man.at("checkpoints")) {
    std::ifstream cf(dir / (name.get<std::string>() + ".json"));
    tr.states.push_back(state_from_json(json::parse(cf), dir));
  }
  // channels.csv
  std::ifstream cf(dir / "channels.csv");
  if (cf) {
    std::string line;
    std::getline(cf, line);  // header
    while (std::getline(cf, line)) {
      std::vector<double> row;
      std::size_t pos = 0;
      while (pos <= line.size()) {
        const std::size_t c = line.find(',', pos);
        const std::string tok =
            line.substr(pos, c == std::string::npos ? c : c - pos);
        if (!tok.empty()) row.push_back(std::strtod(tok.c_str(), nullptr));
        if (c == std::string::npos) break;
        pos = c + 1;
      }
      if (row.empty()) continue;
      tr.channel_times.push_back(row[0]);
      tr.channel_rows.push_back(
          std::vector<double>(row.begin() + 1, row.end()));
    }
  }
  tr.validate();
  return tr;
}

void write_csv(const fs::path& path, const std::vector<std::string>& columns,
               const std::vector<double>& times,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot write " + path.string());
  f << "t";
  for (const auto& c : columns) f << "," << c;
  f << "\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    f << fmt17(times[i]);
    for (double v : rows[i]) f << "," << fmt17(v);
    f << "\n";
  }
}

void write_svg_chart(const fs::path& path, const std::vector<SvgSeries>& series,
                     const std::string& title, bool logy) {
  const int W = 720, H = 420, ML = 70, MR = 20, MT = 40, MB = 40;
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      double y = s.y[i];
      if (logy) {
        if (!(y > 0)) continue;
        y = std::log10(y);
      }
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  if (!(xhi > xlo)) xhi = xlo + 1;
  if (!(yhi > ylo)) yhi = ylo + 1;
  auto px = [&](double x) {
    return ML + (x - xlo) / (xhi - xlo) * (W - ML - MR);
  };
  auto py = [&](double y) {
    if (logy) y = std::log10(std::max(y, 1e-300));
    return H - MB - (y - ylo) / (yhi - ylo) * (H - MT - MB);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#9467bd", "#ff7f0e", "#8c564b"};
  std::ofstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot write " + path.string());
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='"
    << H << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  f << "<text x='" << W / 2 << "' y='20' text-anchor='middle' "
    << "font-family='sans-serif' font-size='14'>" << title << "</text>\n";
  f << "<line x1='" << ML << "' y1='" << H - MB << "' x2='" << W - MR
    << "' y2='" << H - MB << "' stroke='black'/>\n";
  f << "<line x1='" << ML << "' y1='" << MT << "' x2='" << ML << "' y2='"
    << H - MB << "' stroke='black'/>\n";
  int ci = 0;
  for (const auto& s : series) {
    f << "<polyline fill='none' stroke='" << colors[ci % 6]
      << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (logy && !(s.y[i] > 0)) continue;
      f << px(s.x[i]) << "," << py(s.y[i]) << " ";
    }
    f << "'/>\n";
    f << "<text x='" << W - MR - 150 << "' y='" << MT + 16 * ci
      << "' font-family='sans-serif' font-size='12' fill='" << colors[ci % 6]
      << "'>" << s.label << "</text>\n";
    ++ci;
  }
  f << "</svg>\n";
}

std::string config_hash(const json& config) {
  const std::string s = config.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

}  // namespace lmcf::io
