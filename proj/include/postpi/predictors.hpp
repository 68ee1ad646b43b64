#pragma once

#include "postpi/numerics.hpp"
#include "postpi/random.hpp"

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

namespace postpi {

/// Natural cubic spline basis for one covariate: the linear term plus one
/// truncated-power column per knot except the last two. Knots sit at equally
/// spaced quantiles of the training values, with the boundary knots at the
/// sample minimum and maximum. The basis is evaluated on u = (x - lo) / span
/// so its scale does not depend on the covariate's units. Outside the
/// boundary knots every basis function is affine.
class NaturalSplineBasis {
 public:
  NaturalSplineBasis() = default;
  NaturalSplineBasis(const RealVector& training_values,
                     std::size_t interior_knots);

  /// Number of columns produced (0 for a constant covariate).
  std::size_t size() const noexcept { return dimension_; }
  /// Knot locations in the covariate's own units.
  std::vector<double> knots() const;

  /// Row per value, size() columns.
  RealMatrix evaluate(const RealVector& x) const;
  /// d/dx of each basis column.
  RealMatrix derivative(const RealVector& x) const;
  /// Integrated squared second derivative, taken in u units:
  /// Omega(j, k) = int N_j''(u) N_k''(u) du.
  RealMatrix roughness() const;

 private:
  double truncated_cubic_term(double u, std::size_t k) const;

  double lo_ = 0.0;
  double span_ = 1.0;
  std::vector<double> knots_;  // u units, strictly increasing
  std::size_t dimension_ = 0;
};

struct SplineAdditiveConfig {
  std::size_t interior_knots = 10;
  /// Weight on the summed integrated squared second derivatives, relative to
  /// the mean squared error. Zero gives the plain least-squares fit. Affine
  /// functions are never penalised.
  double roughness_penalty = 0.0;
};

/// Default penalty used by the simulation pipeline's additive model.
inline constexpr double kDefaultSimulationRoughness = 1e-4;

struct RandomForestConfig {
  std::size_t n_trees = 100;
  std::size_t min_leaf = 5;
  /// Features tried per split; unset means max(1, q / 3).
  std::optional<std::size_t> mtry;
  bool bootstrap = true;
  RngSeed seed{};
};

struct SplineAdditiveModel {
  std::vector<NaturalSplineBasis> bases;
  /// Intercept followed by each covariate's block of basis coefficients.
  RealVector coefficients;
  RealVector fitted_values;
  double roughness_penalty = 0.0;

  RealMatrix design(const RealMatrix& Z) const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict(const double* row, Eigen::Index stride) const;
};

struct RandomForestModel {
  std::size_t n_features = 0;
  std::vector<RegressionTree> trees;
};

/// Black-box predictions supplied with the data: predict() returns one
/// designated column of Z unchanged.
struct ExternalModel {
  std::size_t n_features = 1;
  std::size_t prediction_column = 0;
};

enum class ModelKind { spline_additive, random_forest, external };

class PredictionModel {
 public:
  using State = std::variant<SplineAdditiveModel, RandomForestModel, ExternalModel>;

  explicit PredictionModel(State state);

  ModelKind kind() const noexcept;
  std::size_t n_features() const noexcept;
  const State& state() const noexcept { return state_; }

 private:
  State state_;
};

PredictionModel train_spline_additive(const RealMatrix& Z, const RealVector& y,
                                      const SplineAdditiveConfig& config = {});

PredictionModel train_random_forest(const RealMatrix& Z, const RealVector& y,
                                    const RandomForestConfig& config = {});

RealVector predict(const PredictionModel& model, const RealMatrix& Z);

}  // namespace postpi
