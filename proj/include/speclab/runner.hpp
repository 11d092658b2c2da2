#pragma once

// Executes one RunConfig: resolves the geometry and fields, dispatches to a
// harness, and collects report rows. Sweeps fan a config out over one
// parameter.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "speclab/config.hpp"
#include "speclab/suite.hpp"

namespace speclab {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitPrecondition = 2;
inline constexpr int kExitConfig = 3;

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config
  std::optional<double> tol;          // overrides the config
  int threads = 1;
};

struct RunOutcome {
  int exit_code = kExitPass;
  std::string command;
  std::vector<ReportRow> rows;
  /// Extra CSV files: (name, contents), e.g. the Reilly term ledger.
  std::vector<std::pair<std::string, std::string>> tables;
  std::string message;  // error text for exit codes 2 and 3
};

/// Never throws for configuration or harness errors; they map to exit codes.
RunOutcome run_config(const RunConfig& cfg, const RunOptions& opt = {});

}  // namespace speclab
