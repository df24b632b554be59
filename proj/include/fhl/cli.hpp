#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhl/errors.hpp"
#include "fhl/harnack.hpp"
#include "fhl/sde.hpp"

namespace fhl::cli {

inline constexpr const char* kArtifactVersion = "fhl 0.1.0";

/// Config rejected by validation; `diagnostics` holds one "path: problem" line each.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> diagnostics);
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

struct CouplingBlock {
  double theta0 = 1.0;
  std::size_t n = 256;
  std::size_t refine_levels = 8;
  double refine_ratio = 0.5;
};

struct RunBlock {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  std::vector<std::string> checks;
  Eigen::VectorXd x, y;
  double p = 2.0;
  std::vector<TestFunction> test_functions;
  std::vector<double> probe_times;   // fractions of T
  std::vector<double> feller_radii;
  std::size_t energy_paths = 200;
  double tau = 0.05;
  double gap_tol = 1e-2;  // relative to |x - y|
  NoiseRoute route = NoiseRoute::kDirect;
};

struct InvariantBlock {
  Eigen::VectorXd x0;
  std::size_t n_steps = 50;
  std::size_t n_chains = 200;
  std::size_t bootstrap = 20;
  std::vector<double> tilts;
  std::size_t w2_samples = 100000;
  std::size_t mc_samples = 10000;
  bool entropy_cost = true;
};

struct OutputBlock {
  std::string dir;
  bool csv = true;
};

struct ExperimentConfig {
  ModelSpec model;
  CouplingBlock coupling;
  RunBlock run;
  InvariantBlock invariant;
  OutputBlock output;
  nlohmann::json source;  // the validated input, echoed into reports

  TimeGrid grid() const;          // uniform with terminal refinement
  TimeGrid plain_grid() const;    // uniform, n cells
};

/// Validates and converts a parsed config; unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Names accepted in run.checks.
const std::vector<std::string>& known_checks();

struct CommandResult {
  nlohmann::json report;
  int exit_code = 0;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 2;
inline constexpr int kExitInconclusive = 3;
inline constexpr int kExitUsage = 64;

/// Each command returns the report; when output.dir is set it also writes
/// report.json and, if enabled, CSV artifacts there.
CommandResult cmd_constants(const ExperimentConfig& cfg);
CommandResult cmd_verify(const ExperimentConfig& cfg);
CommandResult cmd_invariant(const ExperimentConfig& cfg);
CommandResult cmd_sample(const ExperimentConfig& cfg);
CommandResult cmd_couple(const ExperimentConfig& cfg);

/// Canonical serialization used for report.json (sorted keys, 2-space indent).
std::string dump_report(const nlohmann::json& report);

}  // namespace fhl::cli
