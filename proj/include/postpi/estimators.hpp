#pragma once

#include "postpi/numerics.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace postpi {

enum class Method { oracle, classical, naive, postpi, proposed };

/// Canonical reporting order.
inline constexpr std::array<Method, 5> kAllMethods = {
    Method::oracle, Method::classical, Method::naive, Method::postpi,
    Method::proposed};

std::string_view method_name(Method method) noexcept;
std::optional<Method> parse_method(std::string_view name) noexcept;

struct LabeledSample {
  RealVector y;
  RealMatrix x;
  RealVector f;
};

struct UnlabeledSample {
  RealMatrix x;
  RealVector f;
  /// True outcomes; only a simulation can supply these (oracle benchmark).
  std::optional<RealVector> y_true;
};

/// A labeled sample (outcome, covariates, prediction) and an independent
/// unlabeled sample (covariates, prediction) sharing one covariate layout.
struct Dataset {
  LabeledSample labeled;
  UnlabeledSample unlabeled;
  std::vector<std::string> covariate_names;
  /// Column 0 of both covariate matrices is a column of ones.
  bool has_intercept = false;

  std::size_t n() const noexcept { return std::size_t(labeled.y.size()); }
  std::size_t N() const noexcept { return std::size_t(unlabeled.f.size()); }
  std::size_t p() const noexcept { return std::size_t(labeled.x.cols()); }

  /// Throws DimensionError on inconsistent shapes or too few rows
  /// (n >= p + 2, N >= p + 1).
  void validate() const;
};

inline constexpr std::string_view kInterceptName = "(Intercept)";

/// Assembles a Dataset, optionally prepending the intercept column.
/// Covariate names default to x1, x2, ...
Dataset make_dataset(RealVector labeled_y, const RealMatrix& labeled_x,
                     RealVector labeled_f, const RealMatrix& unlabeled_x,
                     RealVector unlabeled_f, bool add_intercept = true,
                     std::vector<std::string> covariate_names = {},
                     std::optional<RealVector> unlabeled_y_true = std::nullopt);

/// Simple regression of labeled outcomes on labeled predictions.
struct RelationshipFit {
  double gamma0 = 0.0;
  double gamma1 = 0.0;
  RealVector residuals;
  /// sum(residuals^2) / (n - 2)
  double sigma_r_sq = 0.0;
};

struct MomentSet {
  RealVector c_xf_u;    // (1/N) sum X_i f_i over unlabeled rows
  RealVector c_xeta_l;  // (1/n) sum X_j eta_j over labeled rows
  RealMatrix m_xx_u;    // (1/N) sum X_i X_i' over unlabeled rows
  RealMatrix s1_u;      // covariance of X_i f_i, centered at c_xf_u
  RealMatrix s2_l;      // (1/n) sum (X_j eta_j)(X_j eta_j)', uncentered
};

struct PostPiVarianceComponents {
  double sigma_r_sq = 0.0;
  double sigma_p_sq = 0.0;
  double gamma1 = 0.0;
};

struct InferenceOptions {
  double alpha = 0.05;
  /// Student-t reference instead of the normal; see reference_df().
  bool t_approx = false;
};

struct FitResult {
  Method method = Method::proposed;
  std::vector<std::string> names;
  RealVector beta;
  RealVector se;
  RealVector ci_low;
  RealVector ci_high;
  RealVector p_value;
  RealMatrix covariance;
  double alpha = 0.05;
  /// Degrees of freedom of the t reference; unset for the normal.
  std::optional<double> df;
  std::size_t n = 0;
  std::size_t N = 0;
};

struct WaldInterval {
  double low = 0.0;
  double high = 0.0;
  double p_value = 1.0;
};

struct ContrastInterval {
  double estimate = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// Upper quantile of the reference distribution: z_{1-alpha/2}, or the
/// matching t quantile when df is given.
double critical_value(double alpha, std::optional<double> df = std::nullopt);

/// beta +- crit * se and the two-sided p-value for a zero coefficient.
/// A zero standard error yields the degenerate interval (beta, beta) with
/// p-value 0 when beta != 0 and 1 otherwise.
WaldInterval wald_interval(double beta, double se, double alpha,
                           std::optional<double> df = std::nullopt);

/// Wald interval for c'beta with variance c' V c.
ContrastInterval contrast_inference(const FitResult& result,
                                    const RealMatrix& covariance,
                                    const RealVector& c, double alpha);

/// Degrees of freedom used with InferenceOptions::t_approx: n - p for
/// classical, N - p for oracle and naive, n - 2 for postpi and proposed.
double reference_df(Method method, const Dataset& data);

RelationshipFit fit_relationship(const RealVector& labeled_y,
                                 const RealVector& labeled_f);

/// gamma0 + gamma1 * f, elementwise.
RealVector pseudo_outcomes(const RelationshipFit& fit,
                           const RealVector& unlabeled_f);

FitResult estimate_oracle(const Dataset& data, const InferenceOptions& options = {});
FitResult estimate_classical(const Dataset& data, const InferenceOptions& options = {});
FitResult estimate_naive(const Dataset& data, const InferenceOptions& options = {});

/// sigma_p^2 is the residual variance of f_U on X_U with denominator N - p.
PostPiVarianceComponents postpi_variance_components(const Dataset& data,
                                                    const RelationshipFit& rel);

/// Regression of pseudo-outcomes on X_U; covariance
/// (X_U'X_U)^-1 (sigma_r^2 + gamma1^2 sigma_p^2).
FitResult estimate_postpi(const Dataset& data, const RelationshipFit& rel,
                          const InferenceOptions& options = {});

MomentSet compute_moments(const Dataset& data, const RelationshipFit& rel);

/// M^-1 (gamma1 c_xf + c_xeta). When `intercept_first`, gamma0 is added to
/// coordinate 0 so the intercept is on the outcome's scale; slopes are
/// unaffected.
RealVector proposed_point_estimate(const MomentSet& moments,
                                   const RelationshipFit& rel,
                                   bool intercept_first);

/// (1/N) M^-1 (gamma1^2 S1 + (N/n) S2) M^-1.
RealMatrix proposed_covariance(const MomentSet& moments, double gamma1,
                               std::size_t n, std::size_t N);

FitResult estimate_proposed(const Dataset& data, const RelationshipFit& rel,
                            const InferenceOptions& options = {});

/// Dispatches on `method`, fitting the relationship model when needed.
FitResult estimate(Method method, const Dataset& data,
                   const InferenceOptions& options = {});

}  // namespace postpi
