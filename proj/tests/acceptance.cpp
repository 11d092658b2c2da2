// Acceptance battery: one pass/fail line per criterion, exit 0 iff all pass.
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "speclab/suite.hpp"

int main(int argc, char** argv) {
  speclab::SuiteOptions opt;
  const char* csv_path = nullptr;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--seed") && i + 1 < argc) opt.seed = std::strtoull(argv[++i], nullptr, 10);
    else if (!std::strcmp(argv[i], "--csv") && i + 1 < argc) csv_path = argv[++i];
  }
  std::string csv;
  const auto results = speclab::run_acceptance(opt, &csv, [](const speclab::CriterionResult& r) {
    std::printf("%s\n", speclab::format_line(r).c_str());
    std::fflush(stdout);
  });
  if (csv_path) std::ofstream(csv_path, std::ios::binary) << csv;
  int failed = 0;
  for (const auto& r : results) failed += !r.pass;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
