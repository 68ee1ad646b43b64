#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace postpi {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Thrown when array shapes disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a design (or moment) matrix is numerically rank deficient.
/// `column()` is the first column found to be linearly dependent on the
/// columns before it.
class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(const std::string& what, std::size_t column)
      : std::runtime_error(what), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Relative singular-value threshold below which a design is rejected.
inline constexpr double kRankTolerance = 1e-10;

struct OlsFit {
  RealVector coefficients;
  RealVector residuals;
  double residual_variance = 0.0;
  /// (X'X)^-1, formed from the R factor of the QR decomposition.
  RealMatrix gram_inverse;
};

/// Least squares of y on the columns of X via Householder QR.
/// residual_variance = sum(residuals^2) / variance_denominator.
OlsFit ols_fit(const RealMatrix& X, const RealVector& y,
               std::size_t variance_denominator);

/// (1/m) sum_i X_i v_i over the rows of X.
RealVector cross_moment_mean(const RealMatrix& X, const RealVector& v);

/// X'X / m.
RealMatrix gram_mean(const RealMatrix& X);

/// Mean outer product of the rows of `products`. With `centered`, the row
/// mean is subtracted first. Both forms divide by the row count.
RealMatrix outer_moment(const RealMatrix& products, bool centered);

/// Row i of the result is X_i * v_i.
RealMatrix scale_rows(const RealMatrix& X, const RealVector& v);

/// Inverse of a symmetric positive definite matrix. Throws
/// RankDeficientError if the matrix is singular to working precision.
RealMatrix spd_inverse(const RealMatrix& A);

bool all_finite(const RealMatrix& A);

}  // namespace postpi
