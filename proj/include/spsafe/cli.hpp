#pragma once

#include "spsafe/report.hpp"
#include "spsafe/systems.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace spsafe {

/// Fully resolved run description. Parsing fills every field, including the
/// per-system parameter records, so serializing it back gives the complete
/// effective configuration.
struct RunConfig {
  std::string command;
  std::string system = "toy";

  ToyParams toy;
  ArmParams arm;
  PrimalDualParams pdual;

  std::optional<double> epsilon;
  double eps_min = 0.0;
  double eps_max = 0.0;
  int count = 0;

  double dt = 1e-3;
  double t_f = 10.0;
  int record_stride = 10;

  double nu = 0.5;
  int grid = 101;
  double inflation = 1.1;

  std::uint64_t seed = 1;
  std::optional<double> force_epsilon;
  int n_ic = 50;
  int n_eps = 20;
  double v_tol = 1e-6;
  std::uint64_t step_budget = 400000;

  std::string out;
  bool svg = false;
  std::vector<std::string> inputs;
  std::string certificate;  // path to a bound produced by the epsbar command
  std::string y_column = "h";
};

/// Validates and resolves a JSON document into a RunConfig. Unknown keys at
/// any level are rejected with the offending field path; angle-valued arm
/// parameters are taken in degrees and stored in radians.
RunConfig parse_config(const Json& j, const std::string& command);

/// Complete effective configuration, inverse of parse_config up to float
/// rounding of the degree-valued angles.
Json config_json(const RunConfig& cfg);

/// Instantiates the configured model with its parameter record applied.
SystemBundle build_system(const RunConfig& cfg);

int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::ostream& log);
int cmd_epsbar(const RunConfig& cfg, std::ostream& log);
int cmd_check(const RunConfig& cfg, std::ostream& log);
int cmd_plot(const RunConfig& cfg, std::ostream& log);

/// Parse + dispatch + exception-to-exit-code mapping:
/// 0 ok, 2 config, 3 diverged, 4 estimation, 5 unsupported certificate.
int run_command(const Json& j, const std::string& command, std::ostream& log);

}  // namespace spsafe
