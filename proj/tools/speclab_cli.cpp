// speclab --config run.cfg [--out DIR] [--tol X] [--seed N] [--threads N]
// speclab --suite [--out DIR] [--seed N] [--threads N]
//
// Exit codes: 0 pass, 1 check failed, 2 precondition not met, 3 bad config.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <cctype>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "speclab/config.hpp"
#include "speclab/error.hpp"
#include "speclab/runner.hpp"
#include "speclab/suite.hpp"

namespace fs = std::filesystem;

namespace {

bool write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

std::string safe_name(std::string s) {
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ||
          c == '=' || c == '@')) {
      c = '_';
    }
  }
  return s;
}

int run_suite(const fs::path& out_dir, std::uint64_t seed, int threads) {
  speclab::SuiteOptions opt;
  opt.seed = seed;
  opt.threads = threads;
  const auto results = speclab::run_acceptance(
      opt, nullptr, [](const speclab::CriterionResult& r) { std::cout << speclab::format_line(r) << '\n'; });
  bool ok = true;
  for (const auto& r : results) ok = ok && r.pass;
  fs::create_directories(out_dir);
  if (!write_file(out_dir / "suite.csv", speclab::suite_csv(results))) {
    std::cerr << "cannot write " << (out_dir / "suite.csv") << '\n';
    return speclab::kExitConfig;
  }
  return ok ? speclab::kExitPass : speclab::kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical checks for Steklov and Wentzell eigenvalue comparisons"};
  std::string config_path;
  std::string out_dir = "out";
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool suite = false;

  auto* cfg_opt = app.add_option("--config,-c", config_path, "run configuration file")
                      ->check(CLI::ExistingFile);
  auto* suite_opt = app.add_flag("--suite", suite, "run the acceptance matrix");
  cfg_opt->excludes(suite_opt);
  app.add_option("--out,-o", out_dir, "output directory");
  app.add_option("--tol", tol, "override the pass tolerance")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "override the seed");
  app.add_option("--threads,-j", threads, "worker threads")->check(CLI::Range(1, 64));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : speclab::kExitConfig;
  }

  if (suite) return run_suite(out_dir, seed.value_or(42), threads);
  if (config_path.empty()) {
    std::cerr << "one of --config or --suite is required\n" << app.help();
    return speclab::kExitConfig;
  }

  speclab::RunConfig cfg;
  try {
    cfg = speclab::RunConfig::load(config_path);
  } catch (const speclab::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return speclab::kExitConfig;
  }

  speclab::RunOptions opt;
  opt.seed = seed;
  opt.tol = tol;
  opt.threads = threads;
  const speclab::RunOutcome res = speclab::run_config(cfg, opt);
  if (res.exit_code == speclab::kExitConfig) {
    std::cerr << config_path << ": " << res.message << '\n';
    return res.exit_code;
  }

  const fs::path dir = cfg.has("out") ? fs::path(cfg.text("out")) : fs::path(out_dir);
  fs::create_directories(dir);
  std::ostringstream csv;
  speclab::write_report_csv(csv, res.rows);
  const fs::path main_csv = dir / (res.command + ".csv");
  if (!write_file(main_csv, csv.str())) {
    std::cerr << "cannot write " << main_csv << '\n';
    return speclab::kExitConfig;
  }
  for (const auto& [name, text] : res.tables) {
    write_file(dir / safe_name(res.command + "_" + name + ".csv"), text);
  }

  for (const auto& r : res.rows) {
    std::cout << (r.pass ? "ok   " : "FAIL ") << r.case_id << "  " << r.quantity << " = "
              << r.value;
    if (r.has_reference) std::cout << "  (ref " << r.reference << ", tol " << r.tol << ")";
    std::cout << '\n';
  }
  if (!res.message.empty()) std::cerr << res.message << '\n';
  std::cout << "wrote " << main_csv.string() << '\n';
  return res.exit_code;
}
