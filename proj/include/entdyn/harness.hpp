#pragma once

#include "entdyn/config.hpp"
#include "entdyn/grid.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace entdyn {

enum ExitCode : int { kExitPass = 0, kExitComparisonFail = 1, kExitConfigError = 2, kExitNumericalError = 3 };

struct ComparisonReport {
  std::string scenario;
  std::string metric;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;  ///< value <= tolerance
  double runtime_seconds = 0.0;

  nlohmann::json to_json() const;
};

ComparisonReport make_report(std::string scenario, std::string metric, double value, double tolerance,
                             double runtime_seconds);

/// Distance between two densities on identical grids.
double compare_fields(const DensityField& a, const DensityField& b, Metric metric);

struct RunResult {
  int exit_code = kExitPass;
  std::vector<ComparisonReport> reports;
  std::string message;
};

/// Validates the config, executes its scenario and writes CSV/JSON artifacts
/// into config.output_dir. Failures are mapped to exit codes rather than
/// thrown: 2 for configuration errors, 3 for numerical ones, 1 when a report
/// misses its tolerance.
RunResult run(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Command-line entry point: `<subcommand> [--config path] [--out dir]
/// [--seed u64] [--quiet]`. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace entdyn
