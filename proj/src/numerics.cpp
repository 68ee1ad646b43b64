#include "postpi/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace postpi {

namespace {

void require_rows(const RealMatrix& X, Eigen::Index n, const char* what) {
  if (X.rows() != n) {
    std::ostringstream msg;
    msg << what << ": matrix has " << X.rows() << " rows but vector has "
        << n << " entries";
    throw DimensionError(msg.str());
  }
}

// Upper triangle is authoritative; copy it down so the result is exactly
// symmetric.
void mirror_upper(RealMatrix& A) {
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = j + 1; i < A.rows(); ++i) A(i, j) = A(j, i);
}

}  // namespace

bool all_finite(const RealMatrix& A) { return A.allFinite(); }

OlsFit ols_fit(const RealMatrix& X, const RealVector& y,
               std::size_t variance_denominator) {
  require_rows(X, y.size(), "ols_fit");
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (p == 0) throw DimensionError("ols_fit: design has no columns");
  if (n <= p) {
    std::ostringstream msg;
    msg << "ols_fit: need more rows than columns (n=" << n << ", p=" << p
        << ")";
    throw DimensionError(msg.str());
  }
  if (variance_denominator == 0)
    throw std::invalid_argument("ols_fit: variance denominator must be > 0");
  if (!X.allFinite() || !y.allFinite())
    throw std::invalid_argument("ols_fit: non-finite input");

  Eigen::HouseholderQR<RealMatrix> qr(X);
  const RealMatrix R =
      qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();

  // Singular values of R are those of X.
  const RealVector sv = Eigen::JacobiSVD<RealMatrix>(R).singularValues();
  const double largest = sv(0);
  const double smallest = sv(p - 1);
  if (!(largest > 0.0) || smallest <= kRankTolerance * largest) {
    Eigen::Index bad = p - 1;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (std::abs(R(k, k)) <= kRankTolerance * largest) {
        bad = k;
        break;
      }
    }
    std::ostringstream msg;
    msg << "ols_fit: design is rank deficient; column " << bad
        << " is linearly dependent on earlier columns (singular value ratio "
        << (largest > 0.0 ? smallest / largest : 0.0) << ")";
    throw RankDeficientError(msg.str(), static_cast<std::size_t>(bad));
  }

  OlsFit fit;
  fit.coefficients = qr.solve(y);
  fit.residuals = y - X * fit.coefficients;
  fit.residual_variance =
      fit.residuals.squaredNorm() / double(variance_denominator);

  const RealMatrix r_inv =
      R.triangularView<Eigen::Upper>().solve(RealMatrix::Identity(p, p));
  fit.gram_inverse = r_inv * r_inv.transpose();
  mirror_upper(fit.gram_inverse);
  return fit;
}

RealVector cross_moment_mean(const RealMatrix& X, const RealVector& v) {
  require_rows(X, v.size(), "cross_moment_mean");
  if (X.rows() < 1) throw DimensionError("cross_moment_mean: no rows");
  return X.transpose() * v / double(X.rows());
}

RealMatrix gram_mean(const RealMatrix& X) {
  if (X.rows() < 1) throw DimensionError("gram_mean: no rows");
  RealMatrix G = RealMatrix::Zero(X.cols(), X.cols());
  G.selfadjointView<Eigen::Upper>().rankUpdate(X.transpose());
  G /= double(X.rows());
  mirror_upper(G);
  return G;
}

RealMatrix outer_moment(const RealMatrix& products, bool centered) {
  const Eigen::Index m = products.rows();
  if (m < (centered ? 2 : 1))
    throw DimensionError(centered
                             ? "outer_moment: centered form needs >= 2 rows"
                             : "outer_moment: no rows");
  if (!centered) return gram_mean(products);
  const RealVector mean = products.colwise().mean().transpose();
  const RealMatrix deviations = products.rowwise() - mean.transpose();
  return gram_mean(deviations);
}

RealMatrix scale_rows(const RealMatrix& X, const RealVector& v) {
  require_rows(X, v.size(), "scale_rows");
  return v.asDiagonal() * X;
}

RealMatrix spd_inverse(const RealMatrix& A) {
  if (A.rows() != A.cols())
    throw DimensionError("spd_inverse: matrix is not square");
  const Eigen::Index p = A.rows();
  const double scale = A.diagonal().cwiseAbs().maxCoeff();
  Eigen::LLT<RealMatrix> llt(A);
  const RealMatrix L = llt.matrixL();
  // Pivots of a Gram-type matrix scale like squared singular values.
  const double cutoff = 1e-14 * scale;
  for (Eigen::Index k = 0; k < p; ++k) {
    const double pivot = L(k, k) * L(k, k);
    const bool failed_here = llt.info() != Eigen::Success && k == p - 1;
    if (failed_here || !std::isfinite(pivot) || !(pivot > cutoff)) {
      std::ostringstream msg;
      msg << "matrix is singular; column " << k
          << " is linearly dependent on earlier columns";
      throw RankDeficientError(msg.str(), static_cast<std::size_t>(k));
    }
  }
  RealMatrix inv = llt.solve(RealMatrix::Identity(p, p));
  mirror_upper(inv);
  return inv;
}

}  // namespace postpi
