#include "postpi/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace postpi {

namespace {

// Type-7 (linear interpolation) sample quantile of sorted data.
double sorted_quantile(const std::vector<double>& sorted, double prob) {
  const double h = prob * double(sorted.size() - 1);
  const auto below = static_cast<std::size_t>(std::floor(h));
  const std::size_t above = std::min(below + 1, sorted.size() - 1);
  return sorted[below] + (h - double(below)) * (sorted[above] - sorted[below]);
}

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace

NaturalSplineBasis::NaturalSplineBasis(const RealVector& training_values,
                                       std::size_t interior_knots) {
  if (training_values.size() == 0)
    throw DimensionError("NaturalSplineBasis: no training values");
  std::vector<double> sorted(training_values.begin(), training_values.end());
  std::sort(sorted.begin(), sorted.end());
  lo_ = sorted.front();
  span_ = sorted.back() - sorted.front();
  if (!(span_ > 0.0)) {
    span_ = 1.0;
    dimension_ = 0;
    return;
  }
  for (double& v : sorted) v = (v - lo_) / span_;

  const std::size_t total = interior_knots + 2;
  for (std::size_t j = 0; j < total; ++j) {
    const double q = j + 1 == total
                         ? 1.0
                         : sorted_quantile(sorted, double(j) / double(total - 1));
    // Tied quantiles (discrete covariates) would give duplicate knots.
    if (knots_.empty() || q > knots_.back() + 1e-12) knots_.push_back(q);
  }
  if (knots_.back() < 1.0) knots_.back() = 1.0;
  dimension_ = knots_.size() - 1;
}

std::vector<double> NaturalSplineBasis::knots() const {
  std::vector<double> out;
  out.reserve(knots_.size());
  for (double k : knots_) out.push_back(lo_ + span_ * k);
  return out;
}

double NaturalSplineBasis::truncated_cubic_term(double u, std::size_t k) const {
  const std::size_t last = knots_.size() - 1;
  auto d = [&](std::size_t j) {
    const double a = positive_part(u - knots_[j]);
    const double b = positive_part(u - knots_[last]);
    return (a * a * a - b * b * b) / (knots_[last] - knots_[j]);
  };
  return d(k) - d(last - 1);
}

RealMatrix NaturalSplineBasis::evaluate(const RealVector& x) const {
  RealMatrix out(x.size(), static_cast<Eigen::Index>(dimension_));
  if (dimension_ == 0) return out;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double u = (x(i) - lo_) / span_;
    out(i, 0) = u;
    for (std::size_t k = 0; k + 1 < dimension_; ++k)
      out(i, Eigen::Index(k + 1)) = truncated_cubic_term(u, k);
  }
  return out;
}

RealMatrix NaturalSplineBasis::derivative(const RealVector& x) const {
  RealMatrix out(x.size(), static_cast<Eigen::Index>(dimension_));
  if (dimension_ == 0) return out;
  const std::size_t last = knots_.size() - 1;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double u = (x(i) - lo_) / span_;
    auto d = [&](std::size_t j) {
      const double a = positive_part(u - knots_[j]);
      const double b = positive_part(u - knots_[last]);
      return 3.0 * (a * a - b * b) / (knots_[last] - knots_[j]);
    };
    out(i, 0) = 1.0 / span_;
    for (std::size_t k = 0; k + 1 < dimension_; ++k)
      out(i, Eigen::Index(k + 1)) = (d(k) - d(last - 1)) / span_;
  }
  return out;
}

RealMatrix NaturalSplineBasis::roughness() const {
  const auto dim = static_cast<Eigen::Index>(dimension_);
  RealMatrix omega = RealMatrix::Zero(dim, dim);
  if (dimension_ < 2) return omega;
  const std::size_t last = knots_.size() - 1;
  // Second derivatives are piecewise linear in u with breaks at the knots,
  // so Simpson's rule on each knot interval integrates products exactly.
  auto second = [&](double u, std::size_t k) {
    auto d = [&](std::size_t j) {
      return 6.0 * (positive_part(u - knots_[j]) - positive_part(u - knots_[last])) /
             (knots_[last] - knots_[j]);
    };
    return d(k) - d(last - 1);
  };
  const std::size_t m = dimension_ - 1;
  for (std::size_t seg = 0; seg < last; ++seg) {
    const double a = knots_[seg], b = knots_[seg + 1], mid = 0.5 * (a + b);
    const double w = (b - a) / 6.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double ja = second(a, j), jm = second(mid, j), jb = second(b, j);
      for (std::size_t k = j; k < m; ++k) {
        const double v =
            w * (ja * second(a, k) + 4.0 * jm * second(mid, k) + jb * second(b, k));
        omega(Eigen::Index(j + 1), Eigen::Index(k + 1)) += v;
      }
    }
  }
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index k = j + 1; k < dim; ++k) omega(k, j) = omega(j, k);
  return omega;
}

RealMatrix SplineAdditiveModel::design(const RealMatrix& Z) const {
  if (static_cast<std::size_t>(Z.cols()) != bases.size()) {
    std::ostringstream msg;
    msg << "spline model expects " << bases.size() << " columns, got " << Z.cols();
    throw DimensionError(msg.str());
  }
  Eigen::Index width = 1;
  for (const auto& b : bases) width += Eigen::Index(b.size());
  RealMatrix B(Z.rows(), width);
  B.col(0).setOnes();
  Eigen::Index at = 1;
  for (std::size_t j = 0; j < bases.size(); ++j) {
    const auto w = Eigen::Index(bases[j].size());
    if (w == 0) continue;
    B.middleCols(at, w) = bases[j].evaluate(Z.col(Eigen::Index(j)));
    at += w;
  }
  return B;
}

PredictionModel train_spline_additive(const RealMatrix& Z, const RealVector& y,
                                      const SplineAdditiveConfig& config) {
  if (Z.rows() != y.size())
    throw DimensionError("train_spline_additive: Z and y row counts differ");
  if (Z.cols() == 0) throw DimensionError("train_spline_additive: Z has no columns");
  if (!Z.allFinite() || !y.allFinite())
    throw std::invalid_argument("train_spline_additive: non-finite input");
  if (!(config.roughness_penalty >= 0.0))
    throw std::invalid_argument("train_spline_additive: penalty must be >= 0");

  SplineAdditiveModel model;
  model.roughness_penalty = config.roughness_penalty;
  for (Eigen::Index j = 0; j < Z.cols(); ++j)
    model.bases.emplace_back(Z.col(j), config.interior_knots);

  const RealMatrix B = model.design(Z);
  const Eigen::Index n = B.rows();
  const Eigen::Index dim = B.cols();
  if (n <= dim) {
    std::ostringstream msg;
    msg << "train_spline_additive: basis dimension " << dim
        << " needs more than " << n << " training rows; use fewer knots";
    throw RankDeficientError(msg.str(), std::size_t(dim - 1));
  }

  auto covariate_of = [&](std::size_t column) {
    std::size_t at = 1;
    for (std::size_t j = 0; j < model.bases.size(); ++j) {
      at += model.bases[j].size();
      if (column < at) return j;
    }
    return model.bases.size() - 1;
  };

  try {
    if (config.roughness_penalty == 0.0) {
      model.coefficients = ols_fit(B, y, std::size_t(n - dim)).coefficients;
    } else {
      // Penalised least squares as an augmented ordinary least squares
      // problem: rows of sqrt(n * lambda) * Omega^(1/2) with zero response.
      RealMatrix root = RealMatrix::Zero(dim, dim);
      Eigen::Index at = 1;
      for (const auto& basis : model.bases) {
        const auto w = Eigen::Index(basis.size());
        if (w == 0) continue;
        Eigen::SelfAdjointEigenSolver<RealMatrix> eig(basis.roughness());
        const RealVector vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        root.block(at, at, w, w) = vals.asDiagonal() * eig.eigenvectors().transpose();
        at += w;
      }
      const double weight = std::sqrt(double(n) * config.roughness_penalty);
      RealMatrix A(n + dim, dim);
      A << B, weight * root;
      RealVector rhs = RealVector::Zero(n + dim);
      rhs.head(n) = y;
      model.coefficients = ols_fit(A, rhs, std::size_t(n)).coefficients;
    }
  } catch (const RankDeficientError& e) {
    const std::size_t col = e.column();
    std::ostringstream msg;
    if (col == 0) {
      msg << "train_spline_additive: intercept column is degenerate";
    } else {
      msg << "train_spline_additive: basis column " << col << " of covariate "
          << covariate_of(col) << " is linearly dependent; use fewer knots";
    }
    throw RankDeficientError(msg.str(), col);
  }
  model.fitted_values = B * model.coefficients;
  return PredictionModel(std::move(model));
}

}  // namespace postpi
