// Command-line front end: scenario runs, stored-trace diagnostics,
// verification suites and the drift spectrum table.
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 verification
// failure. Thread count follows OMP_NUM_THREADS.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "lmcf/drift.hpp"
#include "lmcf/io.hpp"
#include "lmcf/scenario.hpp"

using namespace lmcf;

namespace {
int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    const bool config = e.code() == ErrorCode::ConfigError ||
                        e.code() == ErrorCode::UnknownSuite ||
                        e.code() == ErrorCode::IoError;
    std::cerr << "error: " << e.what() << "\n";
    return config ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian mean curvature flow laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", scenario_name, trace_dir;
  std::string suite = "all", json_out;

  auto* run_cmd = app.add_subcommand("run", "run a scenario to a trace dir");
  run_cmd->add_option("--config", config_path, "TOML config file");
  run_cmd->add_option("--scenario", scenario_name, "scenario name override");
  run_cmd->add_option("--out", out_dir, "output directory");

  auto* diag_cmd =
      app.add_subcommand("diag", "diagnostics reports over a stored trace");
  diag_cmd->add_option("--trace", trace_dir, "trace directory")->required();
  diag_cmd->add_option("--config", config_path, "TOML config file");
  diag_cmd->add_option("--out", out_dir, "output directory");

  auto* verify_cmd =
      app.add_subcommand("verify", "run a verification suite (or 'all')");
  verify_cmd->add_option("suite", suite, "suite name or 'all'");
  verify_cmd->add_option("--config", config_path, "TOML config file");
  verify_cmd->add_option("--json", json_out, "write machine-readable report");

  int kmax = 6;
  auto* spectrum_cmd =
      app.add_subcommand("spectrum", "drift operator eigen table");
  spectrum_cmd->add_option("--kmax", kmax, "max Hermite degree");

  auto* list_cmd = app.add_subcommand("list-scenarios", "list scenarios");

  CLI11_PARSE(app, argc, argv);

  if (list_cmd->parsed()) {
    for (const auto& s : lab::scenarios())
      std::cout << s.name << "\t" << s.description << "\n";
    return 0;
  }

  if (run_cmd->parsed()) {
    return guarded([&] {
      lab::Config cfg = config_path.empty()
                            ? lab::Config{}
                            : lab::Config::parse_file(config_path);
      if (!scenario_name.empty()) cfg.set("scenario", scenario_name);
      auto summary = lab::cli_run(cfg, out_dir);
      std::cout << summary.dump(1) << "\n";
      return 0;
    });
  }

  if (diag_cmd->parsed()) {
    return guarded([&] {
      lab::Config cfg = config_path.empty()
                            ? lab::Config{}
                            : lab::Config::parse_file(config_path);
      auto out = lab::cli_diag(trace_dir, cfg, out_dir);
      std::cout << out.dump(1) << "\n";
      return 0;
    });
  }

  if (verify_cmd->parsed()) {
    return guarded([&] {
      lab::Config cfg = config_path.empty()
                            ? lab::Config{}
                            : lab::Config::parse_file(config_path);
      std::vector<std::string> names;
      if (suite == "all")
        names = lab::suite_names();
      else
        names.push_back(suite);
      nlohmann::json all = nlohmann::json::array();
      bool ok = true;
      for (const auto& name : names) {
        auto rep = lab::run_suite(name, cfg);
        all.push_back(rep.to_json());
        for (const auto& c : rep.checks) {
          std::cout << (c.pass ? "PASS" : "FAIL") << "  [" << rep.suite
                    << "] " << c.name << "  (measured " << c.measured
                    << ", bound " << c.bound << ")"
                    << (c.note.empty() ? "" : "  " + c.note) << "\n";
          ok = ok && c.pass;
        }
        std::cout.flush();
      }
      if (!json_out.empty()) std::ofstream(json_out) << all.dump(1) << "\n";
      return ok ? 0 : 4;
    });
  }

  if (spectrum_cmd->parsed()) {
    return guarded([&] {
      auto basis = HermiteBasis::make(kmax);
      std::cout << "drift 1-form modes (rate = 1/2 - (k1+k2)/2):\n";
      for (int k = 0; k <= kmax; ++k)
        std::cout << "  degree " << k << ": rate " << 0.5 - 0.5 * k << "\n";
      std::cout << "  singular mode d ln|x|: rate 1\n";
      std::cout << "fd residual of (L - mu) phi over the basis: "
                << basis.verify() << "\n";
      std::cout << "fd residual of the log mode: "
                << HermiteBasis::verify_log_mode() << "\n";
      return 0;
    });
  }
  return 0;
}
