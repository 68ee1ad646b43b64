#pragma once

#include "postpi/estimators.hpp"
#include "postpi/simulation.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace postpi {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitRuntime = 3 };

struct SimulateConfig {
  int setting_id = 1;
  std::optional<std::size_t> n_t;
  std::optional<std::size_t> n;
  std::optional<std::size_t> N;
  double beta1 = 0.0;
  std::size_t reps = 1000;
  std::uint64_t seed = 0;
  std::vector<std::string> methods;  // empty means all
  double alpha = 0.05;
  bool t_approx = false;
  std::string predictor = "trained";
  std::size_t threads = 1;
  std::filesystem::path out;  // empty: print the table only
};

struct EstimateConfig {
  std::filesystem::path labeled_path;
  std::filesystem::path unlabeled_path;
  std::string outcome_col = "y";
  std::string prediction_col = "f";
  std::vector<std::string> covariate_cols;  // empty: every other labeled column
  std::string method = "proposed";
  double alpha = 0.05;
  bool t_approx = false;
  bool intercept = true;
  std::filesystem::path out;  // empty: JSON to stdout
};

struct ReportConfig {
  std::vector<std::filesystem::path> paths;
  std::filesystem::path out;  // empty: table to stdout
};

/// Writes the labeled and unlabeled splits of one simulated replicate, with
/// the predictor's outputs in column f, as CSV files ready for `estimate`.
struct GenerateConfig {
  int setting_id = 3;
  std::optional<std::size_t> n_t;
  std::optional<std::size_t> n;
  std::optional<std::size_t> N;
  double beta1 = 0.0;
  std::uint64_t seed = 0;
  std::size_t rep = 0;
  std::string predictor = "trained";
  std::filesystem::path out;
};

/// Setting defaults with any overrides from `config` applied.
SimSetting simulation_setting(const SimulateConfig& config);

/// Each command returns an ExitCode and reports problems on `err`.
int cmd_simulate(const SimulateConfig& config, std::ostream& out, std::ostream& err);
int cmd_estimate(const EstimateConfig& config, std::ostream& out, std::ostream& err);
int cmd_report(const ReportConfig& config, std::ostream& out, std::ostream& err);
int cmd_generate(const GenerateConfig& config, std::ostream& out, std::ostream& err);

/// Loads the two CSV files into a Dataset the way `estimate` does.
Dataset load_dataset(const EstimateConfig& config);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace postpi
