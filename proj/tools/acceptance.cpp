// Runs the acceptance suite and prints one PASS/FAIL line per criterion.
//
//   nlkg_acceptance [config.json]

#include <cstdio>
#include <exception>
#include <iostream>

#include "nlkg/acceptance.hpp"
#include "nlkg/config.hpp"

int main(int argc, char** argv) {
  using namespace nlkg;
  RunConfig cfg;
  try {
    if (argc > 1) cfg = load_config(argv[1]);
  } catch (const ValidationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
  const auto rep = acceptance::run_suite(cfg, [](const acceptance::CriterionResult& r) {
    std::cout << acceptance::format_row(r) << std::endl;
  });
  std::printf("%s: %zu criteria, %.1fs total\n", rep.all_ok() ? "ALL PASS" : "FAILURES",
              rep.rows.size(), rep.seconds);
  return rep.all_ok() ? 0 : 3;
}
