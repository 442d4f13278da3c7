#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "codedba/phy.hpp"
#include "codedba/sim.hpp"

namespace codedba::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kInfeasible = 3,
  kNumericalFailure = 4,
};

/// Rejected configuration; what() carries a "line N: " prefix.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  Scenario scenario;
  std::vector<CodebookSpec> schemes;
  std::optional<double> optimize_rate;   ///< R_min for `optimize`, bits/s
  std::optional<double> optimize_kappa;  ///< direct kappa for `optimize`
  DetectorSetup detector;
};

/// Parses and validates a JSON run configuration. Unknown keys are errors.
RunConfig parse_run_config(std::string_view json_text);

struct CommandOptions {
  std::string out;  ///< empty: stdout where the command allows it
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

int cmd_optimize(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
int cmd_sweep(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
int cmd_validate_detector(const RunConfig& config, const CommandOptions& opts,
                          std::ostream& log);

/// Reads the config file and dispatches; every failure maps to an ExitCode.
int run_command(const std::string& command, const std::string& config_path,
                const CommandOptions& opts, std::ostream& log);

}  // namespace codedba::cli
