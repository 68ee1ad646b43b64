#pragma once

#include "postpi/estimators.hpp"
#include "postpi/numerics.hpp"
#include "postpi/predictors.hpp"
#include "postpi/random.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace postpi {

/// Where the replicate's predictions come from.
enum class PredictorSource {
  /// Additive spline (settings 1-2) or random forest (setting 3) trained on
  /// the training split.
  trained,
  /// E[Y | predictor inputs] plus independent N(0, predictor_noise_sd^2)
  /// noise; no training. In setting 3 the predictor sees Z1 only, so this is
  /// (beta1 + rho) * Z1.
  feature_mean,
  /// E[Y | Z] over every simulated covariate plus noise (test hook).
  full_mean,
};

std::string_view predictor_source_name(PredictorSource source) noexcept;
std::optional<PredictorSource> parse_predictor_source(std::string_view name) noexcept;

struct SplitCounts {
  std::size_t n_t = 500;
  std::size_t n = 500;
  std::size_t N = 1000;
};

struct SimSetting {
  int setting_id = 1;
  SplitCounts counts;
  double beta1 = 0.0;
  double noise_sd = 2.0;
  double rho = 0.5;
  PredictorSource predictor = PredictorSource::trained;
  double predictor_noise_sd = 1.0;
  SplineAdditiveConfig spline{10, kDefaultSimulationRoughness};
  /// The seed member is ignored; each replicate derives its own.
  RandomForestConfig forest{};

  /// Defaults for setting 1, 2 or 3.
  static SimSetting defaults(int setting_id, double beta1);
  void validate() const;
};

/// One split of simulated data. `mean` holds E[Y | Z] over all covariates.
struct SimSplit {
  RealMatrix z;
  RealVector y;
  RealVector mean;
};

struct SimData {
  SimSplit train;
  SimSplit labeled;
  SimSplit unlabeled;
};

/// beta1*z1 + z2/2 + 3*z3^3 + 4*z4^2 + eps
double setting12_outcome(double beta1, const RealVector& z, double eps);
/// beta1*z1 + z2 + eps
double setting3_outcome(double beta1, double z1, double z2, double eps);

/// Z1..Z4 iid N(0,1); eps ~ N(0, noise_sd^2).
SimData generate_setting12(const RngSeed& seed, const SplitCounts& counts,
                           double beta1, double noise_sd = 2.0);
/// (Z1, Z2) bivariate normal with correlation rho; eps ~ N(0, noise_sd^2).
SimData generate_setting3(const RngSeed& seed, const SplitCounts& counts,
                          double beta1, double noise_sd = 1.0, double rho = 0.5);
SimData generate(const SimSetting& setting, const RngSeed& seed);

/// Covariates of the inferential model, without the intercept:
/// Z1 for settings 1-2, (Z1, Z2) for setting 3.
RealMatrix inference_covariates(int setting_id, const RealMatrix& z);
/// Inputs of the upstream predictor: Z1..Z4 for settings 1-2, Z1 for
/// setting 3.
RealMatrix predictor_features(int setting_id, const RealMatrix& z);

/// Everything one replicate produces before the estimators run.
struct ReplicateData {
  SimData data;
  RealVector labeled_f;
  RealVector unlabeled_f;
  Dataset dataset;
};

ReplicateData prepare_replicate(const SimSetting& setting, const RngSeed& seed);

/// Inference on the target coefficient (the Z1 slope) for one method.
struct MethodOutcome {
  Method method = Method::proposed;
  bool ok = false;
  std::string error;
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
};

struct ReplicateRecord {
  std::size_t rep_index = 0;
  RngSeed seed{};
  std::vector<MethodOutcome> outcomes;
};

/// Index of the target coefficient in every FitResult (after the intercept).
inline constexpr Eigen::Index kTargetCoefficient = 1;

ReplicateRecord run_replicate(const SimSetting& setting, std::size_t rep_index,
                              std::uint64_t base_seed,
                              const std::vector<Method>& methods,
                              const InferenceOptions& options = {});

struct MetricsRow {
  Method method = Method::proposed;
  double bias = 0.0;
  double mse = 0.0;
  double mean_ci_width = 0.0;
  double coverage = 0.0;
  double rejection_rate = 0.0;
  /// Replicates that contributed (failed ones excluded).
  std::size_t n_reps = 0;
  std::size_t n_failed = 0;
};

/// Folds replicate records (in the given order) into one row per method.
std::vector<MetricsRow> aggregate_metrics(const std::vector<ReplicateRecord>& records,
                                          const std::vector<Method>& methods,
                                          double beta1, double alpha);

struct MonteCarloResult {
  SimSetting setting;
  std::size_t n_reps = 0;
  std::uint64_t base_seed = 0;
  InferenceOptions options;
  std::vector<Method> methods;
  std::vector<MetricsRow> rows;
  std::vector<ReplicateRecord> records;
};

/// Runs replicates 0..n_reps-1 with seeds (base_seed, rep_index). The result
/// does not depend on `threads`.
MonteCarloResult run_monte_carlo(const SimSetting& setting, std::size_t n_reps,
                                 std::uint64_t base_seed,
                                 const std::vector<Method>& methods,
                                 const InferenceOptions& options = {},
                                 std::size_t threads = 1);

}  // namespace postpi
