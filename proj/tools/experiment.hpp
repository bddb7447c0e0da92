#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "arboreal/walksim.hpp"
#include "json.hpp"

namespace arboreal::cli {

/// Invalid configuration; the message names the line or the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode { kOk = 0, kInvariantFailure = 1, kConfigError = 2 };

/// Stage names in dependency order.
const std::vector<std::string>& stage_order();

struct ExperimentConfig {
  std::string name = "experiment";
  nlohmann::json scale;  // {"recipe"}, {"file"}, builder or explicit form
  std::string law = "lazy:0.9998:power:3";
  std::string alpha = "zero";
  std::vector<std::string> stages;

  int ladder_radius = 4;
  int forest_radius = 5;
  bool markov_oracle = true;
  int oracle_depth = 3;
  std::vector<long> kappa;  // optional constraint κ for constrained_forest artifacts

  long record_runs = 2000;
  long record_horizon = 100000;
  long record_max_j = 10;
  long record_transitions = 20000;
  long record_max_i = 5;
  long dichotomy_runs = 1000;
  long dichotomy_horizon = 10000;
  long dichotomy_first_m = 10;
  long mixed_runs = 1000;

  long length = 10000;
  long paths = 200;
  long csv_paths = 5;
  std::uint64_t seed = 1;
  bool stabilizer = true;
  int stabilizer_window = 2;
  int probe_radius = 3;
  long min_epoch = 10;
};

/// Parses JSON text; `origin` prefixes diagnostics.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// "power:3", "geometric:0.5", "lazy:0.9998:power:3", "table:0.5,0.25,0.25".
StepLaw parse_law(const std::string& spec);
/// "zero", "constant:0.1", "power:0.5:2".
AlphaSequence parse_alpha(const std::string& spec);
/// Resolves the scale section; `base` anchors relative file paths.
Scale resolve_scale(const nlohmann::json& spec, const std::filesystem::path& base = {}, BuildLog* log = nullptr);

struct RunResult {
  int exit_code = kOk;
  std::vector<std::string> failures;   // zero-exception invariants that were violated
  std::vector<std::string> artifacts;  // file names written under the output directory
  std::string summary;
};

/// Executes the enabled stages in dependency order and writes artifacts under `out`.
/// Stages whose prerequisites failed are skipped and recorded in the manifest.
RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out,
                         const std::filesystem::path& base = {});

/// Human-readable table from a bundle directory; throws ConfigError naming a stage whose
/// artifact is missing.
std::string render_report(const std::filesystem::path& bundle);

nlohmann::ordered_json ladder_report_json(const GroupModel& model, const LadderReport& report);
nlohmann::ordered_json forest_check_json(const ForestCheck& check);

}  // namespace arboreal::cli
