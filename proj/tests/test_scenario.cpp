#include <doctest.h>

#include <fstream>

#include "lmcf/scenario.hpp"

using namespace lmcf;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}
}  // namespace

TEST_CASE("config parser") {
  auto cfg = lab::Config::parse(R"(
# top comment
seed = 42
name = "probe"
[s1]
n = 12          # inline comment
h = 0.125
flag = true
grid = [1, 2.5, 3]
)");
  CHECK(cfg.integer("seed", 0) == 42);
  CHECK(cfg.str("name", "") == "probe");
  CHECK(cfg.integer("s1.n", 0) == 12);
  CHECK(cfg.num("s1.h", 0) == doctest::Approx(0.125));
  CHECK(cfg.flag("s1.flag", false));
  auto g = cfg.array("s1.grid", {});
  REQUIRE(g.size() == 3);
  CHECK(g[1] == doctest::Approx(2.5));
  CHECK(cfg.num("missing", 7.5) == 7.5);

  CHECK_THROWS_AS(lab::Config::parse("[broken\nx=1"), Error);
  CHECK_THROWS_AS(lab::Config::parse("novalue\n"), Error);
}

TEST_CASE("scenario registry") {
  CHECK(lab::scenarios().size() == 7);
  CHECK(lab::find_scenario("s3-circle-product").name == "s3-circle-product");
  CHECK_THROWS_AS(lab::find_scenario("nope"), Error);
  CHECK_THROWS_AS(lab::run_suite("nope"), Error);
}

TEST_CASE("cli_run emits a complete trace directory and is deterministic") {
  const fs::path out1 = fs::temp_directory_path() / "lmcf_cli_run1";
  const fs::path out2 = fs::temp_directory_path() / "lmcf_cli_run2";
  fs::remove_all(out1);
  fs::remove_all(out2);
  lab::Config cfg;
  cfg.set("scenario", "s1-static-plane");
  cfg.set("s1.n", "60");
  cfg.set("s1.h", "0.2");  // extent 12: the gaussian tail is negligible
  cfg.set("s1.max_time", "0.05");
  auto sum1 = lab::cli_run(cfg, out1);
  auto sum2 = lab::cli_run(cfg, out2);
  CHECK(fs::exists(out1 / "trace" / "manifest.json"));
  CHECK(fs::exists(out1 / "trace" / "channels.csv"));
  CHECK(fs::exists(out1 / "summary.json"));
  CHECK(fs::exists(out1 / "channels.svg"));
  CHECK(sum1["max_displacement"].get<double>() <= 1e-10);
  CHECK(sum1["config_hash"] == sum2["config_hash"]);
  // bit-identical rerun
  CHECK(slurp(out1 / "trace" / "channels.csv") ==
        slurp(out2 / "trace" / "channels.csv"));

  // diag over the stored trace: single plane has excess -4pi and no
  // graphicality over the standard pair
  lab::Config dcfg;
  auto diag = lab::cli_diag(out1 / "trace", dcfg, out1 / "diag");
  CHECK(diag["excess"]["excess"].get<double>() ==
        doctest::Approx(-4.0 * kPi).epsilon(1e-3));
  CHECK(diag["distance"]["D_V"].get<std::string>() == "inf");
  CHECK(fs::exists(out1 / "diag" / "diag.json"));
}

TEST_CASE("fast verification suites pass") {
  lab::Config cfg;
  cfg.set("three_annulus.trials", "5000");
  auto ta = lab::run_suite("three-annulus", cfg);
  CHECK(ta.pass());
  auto ex = lab::run_suite("exactness", cfg);
  CHECK(ex.pass());
  auto de = lab::run_suite("determinism", cfg);
  CHECK(de.pass());
  // report serialization
  auto j = ta.to_json();
  CHECK(j["pass"].get<bool>());
  CHECK(j["checks"].size() == ta.checks.size());
}
