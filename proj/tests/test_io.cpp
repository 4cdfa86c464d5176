#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>

#include "lmcf/io.hpp"

using namespace lmcf;
namespace fs = std::filesystem;

namespace {
fs::path tmpdir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lmcf_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}
}  // namespace

TEST_CASE("plane pair json round trip") {
  Rng rng(5);
  Mat2 s1, s2;
  s1 << 0.1, 0.02, 0.02, -0.05;
  s2 << -0.03, 0.01, 0.01, 0.07;
  const PlanePair V = make_special_pair(standard_pair(), s1, s2);
  auto j = io::to_json(V);
  const PlanePair W = io::pair_from_json(j);
  CHECK(pair_distance(V, W, 256) <= 1e-12);
  CHECK(W.special);

  auto S = CalibratedStructure::rotated(0.83);
  auto S2 = io::structure_from_json(io::to_json(S));
  CHECK((S.J() - S2.J()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("state json round trips exactly") {
  const auto dir = tmpdir("states");
  // potential graph with binary payload
  auto g = PotentialGraph::make(
      standard_pair().p1, 6, 0.13,
      [](Vec2 p) { return std::sin(3 * p[0]) * p[1]; });
  auto j = io::state_to_json(SurfaceState(g), dir / "g.bin");
  auto g2 = std::get<PotentialGraph>(io::state_from_json(j, dir));
  CHECK(g2.n == g.n);
  for (std::size_t i = 0; i < g.f.size(); ++i) CHECK(g2.f[i] == g.f[i]);

  // mesh inline
  auto m = icosphere(0.7, 2);
  auto mj = io::state_to_json(SurfaceState(m));
  auto m2 = std::get<Mesh4D>(io::state_from_json(mj));
  CHECK(m2.faces == m.faces);
  for (int i = 0; i < m.nv(); ++i) CHECK(m2.vertices[i] == m.vertices[i]);

  // curve product
  CurveProduct c{Polyline::circle(1.0, 32), Polyline::ellipse(1, 0.5, 48)};
  auto c2 = std::get<CurveProduct>(
      io::state_from_json(io::state_to_json(SurfaceState(c))));
  CHECK(c2.g1.pts.size() == 32);
  CHECK(c2.g2.pts[7] == c.g2.pts[7]);

  // two chart graph
  auto t = TwoChartGraph::lawlor_glued(standard_pair(), 0.04, 3.0, 16, 16,
                                       0.5, 1.5);
  auto t2 = std::get<TwoChartGraph>(
      io::state_from_json(io::state_to_json(SurfaceState(t))));
  CHECK(t2.eps == t.eps);
  CHECK(t2.chart1.f == t.chart1.f);
}

TEST_CASE("off4 round trip") {
  const auto dir = tmpdir("off4");
  auto m = icosphere(1.1, 1, Vec4(0.2, 0, -0.1, 0.4));
  io::write_off4(m, dir / "m.off4");
  auto m2 = io::read_off4(dir / "m.off4");
  CHECK(m2.nv() == m.nv());
  CHECK(m2.faces == m.faces);
  for (int i = 0; i < m.nv(); ++i)
    CHECK((m2.vertices[i] - m.vertices[i]).norm() == 0.0);  // %.17g exact
}

TEST_CASE("distance report writes inf explicitly") {
  DistanceReport r;
  r.I_V = 0.5;
  r.D_V = std::numeric_limits<double>::infinity();
  r.D_V_infinite = true;
  auto j = io::to_json(r);
  CHECK(j.at("D_V").is_string());
  CHECK(j.at("D_V").get<std::string>() == "inf");
}

TEST_CASE("trace save/load and bit-identical rerun") {
  const auto dir1 = tmpdir("trace1");
  const auto dir2 = tmpdir("trace2");
  CurveProduct c{Polyline::circle(1.0, 64), Polyline::circle(0.8, 64)};
  StepControl ctl;
  ctl.max_time = 0.1;
  ctl.checkpoint_dt = 0.02;
  RunMonitor mon;
  mon.channel_names = {"len1", "len2"};
  mon.channels = [](double, const SurfaceState& s) {
    const auto& cc = std::get<CurveProduct>(s);
    return std::vector<double>{cc.g1.length(), cc.g2.length()};
  };
  auto t1 = run(SurfaceState(c), ctl, mon);
  auto t2 = run(SurfaceState(c), ctl, mon);
  io::save_trace(t1, dir1, {{"scenario", "test"}});
  io::save_trace(t2, dir2, {{"scenario", "test"}});
  CHECK(slurp(dir1 / "channels.csv") == slurp(dir2 / "channels.csv"));

  auto back = io::load_trace(dir1);
  CHECK(back.times.size() == t1.times.size());
  CHECK(back.h0 == t1.h0);
  const auto& s1 = std::get<CurveProduct>(t1.states.back());
  const auto& s2 = std::get<CurveProduct>(back.states.back());
  for (std::size_t i = 0; i < s1.g1.pts.size(); ++i)
    CHECK(s1.g1.pts[i] == s2.g1.pts[i]);  // exact round trip
}

TEST_CASE("resume reproduces a straight-through run bit-identically") {
  CurveProduct c{Polyline::circle(1.0, 96), Polyline::circle(1.0, 96)};
  StepControl full;
  full.max_time = 0.3;
  full.checkpoint_dt = 0.03;
  RunMonitor mon;
  mon.channel_names = {"r1"};
  mon.channels = [](double, const SurfaceState& s) {
    const auto& cc = std::get<CurveProduct>(s);
    double r = 0.0;
    for (const auto& q : cc.g1.pts) r += q.norm();
    return std::vector<double>{r / cc.g1.pts.size()};
  };
  auto whole = run(SurfaceState(c), full, mon);

  StepControl half = full;
  half.max_time = 0.15;
  auto part = run(SurfaceState(c), half, mon);
  // drop the "stopped" bookkeeping event before resuming
  part.events.clear();
  auto resumed = run_resume(part, full, mon);

  REQUIRE(resumed.channel_times.size() == whole.channel_times.size());
  for (std::size_t i = 0; i < whole.channel_times.size(); ++i) {
    CHECK(resumed.channel_times[i] == whole.channel_times[i]);
    CHECK(resumed.channel_rows[i][0] == whole.channel_rows[i][0]);
  }
  const auto& a = std::get<CurveProduct>(whole.states.back());
  const auto& b = std::get<CurveProduct>(resumed.states.back());
  for (std::size_t i = 0; i < a.g1.pts.size(); ++i)
    CHECK(a.g1.pts[i] == b.g1.pts[i]);
}

TEST_CASE("svg chart and config hash") {
  const auto dir = tmpdir("svg");
  io::SvgSeries s;
  s.label = "decay";
  for (int i = 0; i < 50; ++i) {
    s.x.push_back(i * 0.1);
    s.y.push_back(std::exp(-i * 0.1));
  }
  io::write_svg_chart(dir / "c.svg", {s}, "demo", true);
  const std::string body = slurp(dir / "c.svg");
  CHECK(body.find("<svg") != std::string::npos);
  CHECK(body.find("polyline") != std::string::npos);

  nlohmann::json a = {{"x", 1}, {"y", 2}};
  nlohmann::json b = {{"x", 1}, {"y", 3}};
  CHECK(io::config_hash(a) == io::config_hash(a));
  CHECK(io::config_hash(a) != io::config_hash(b));
}
