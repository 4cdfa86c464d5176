// Acceptance gate: every verification suite at its default (shipped)
// configuration, one PASS/FAIL line per check, nonzero exit on failure.

#include <cstdio>

#include "lmcf/scenario.hpp"

int main() {
  using namespace lmcf;
  bool ok = true;
  double total = 0.0;
  for (const auto& name : lab::suite_names()) {
    lab::VerifyReport rep;
    try {
      rep = lab::run_suite(name);
    } catch (const std::exception& e) {
      std::printf("FAIL  [%s] suite threw: %s\n", name.c_str(), e.what());
      ok = false;
      continue;
    }
    total += rep.seconds;
    for (const auto& c : rep.checks) {
      std::printf("%s  [%s] %s  (measured %.6g, bound %.6g)%s%s\n",
                  c.pass ? "PASS" : "FAIL", rep.suite.c_str(), c.name.c_str(),
                  c.measured, c.bound, c.note.empty() ? "" : "  ",
                  c.note.c_str());
      ok = ok && c.pass;
    }
    std::printf("      [%s] %.1f s\n", rep.suite.c_str(), rep.seconds);
    std::fflush(stdout);
  }
  std::printf("\nacceptance total: %.1f s, %s\n", total,
              ok ? "ALL PASS" : "FAILURES PRESENT");
  return ok ? 0 : 1;
}
