#include "postpi/estimators.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace postpi {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    std::ostringstream msg;
    msg << "alpha must lie in (0, 1), got " << alpha;
    throw std::invalid_argument(msg.str());
  }
}

double upper_tail(double statistic, std::optional<double> df) {
  if (df) {
    const boost::math::students_t dist(*df);
    return boost::math::cdf(boost::math::complement(dist, statistic));
  }
  const boost::math::normal dist;
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

FitResult finish(Method method, const Dataset& data, RealVector beta,
                 RealMatrix covariance, const InferenceOptions& options) {
  require_alpha(options.alpha);
  FitResult out;
  out.method = method;
  out.names = data.covariate_names;
  out.alpha = options.alpha;
  out.n = data.n();
  out.N = data.N();
  if (options.t_approx) out.df = reference_df(method, data);

  const Eigen::Index p = beta.size();
  out.se.resize(p);
  out.ci_low.resize(p);
  out.ci_high.resize(p);
  out.p_value.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    out.se(k) = std::sqrt(std::max(covariance(k, k), 0.0));
    const WaldInterval w = wald_interval(beta(k), out.se(k), options.alpha, out.df);
    out.ci_low(k) = w.low;
    out.ci_high(k) = w.high;
    out.p_value(k) = w.p_value;
  }
  out.beta = std::move(beta);
  out.covariance = std::move(covariance);
  return out;
}

FitResult classical_ols(Method method, const Dataset& data, const RealMatrix& X,
                        const RealVector& y, const InferenceOptions& options) {
  const auto rows = std::size_t(X.rows());
  const auto p = std::size_t(X.cols());
  require(rows > p, std::string(method_name(method)) +
                        ": need more rows than covariates");
  OlsFit fit;
  try {
    fit = ols_fit(X, y, rows - p);
  } catch (const RankDeficientError& e) {
    std::ostringstream msg;
    msg << method_name(method) << ": design is singular at covariate '"
        << data.covariate_names.at(e.column()) << "'";
    throw RankDeficientError(msg.str(), e.column());
  }
  return finish(method, data, fit.coefficients,
                fit.gram_inverse * fit.residual_variance, options);
}

bool first_column_is_ones(const RealMatrix& X) {
  return X.cols() > 0 && (X.col(0).array() == 1.0).all();
}

}  // namespace

std::string_view method_name(Method method) noexcept {
  switch (method) {
    case Method::oracle:
      return "oracle";
    case Method::classical:
      return "classical";
    case Method::naive:
      return "naive";
    case Method::postpi:
      return "postpi";
    case Method::proposed:
      return "proposed";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) noexcept {
  for (Method m : kAllMethods)
    if (method_name(m) == name) return m;
  return std::nullopt;
}

void Dataset::validate() const {
  const auto n_rows = labeled.y.size();
  require(labeled.x.rows() == n_rows && labeled.f.size() == n_rows,
          "labeled sample: y, x and f must have the same row count");
  require(unlabeled.x.rows() == unlabeled.f.size(),
          "unlabeled sample: x and f must have the same row count");
  require(labeled.x.cols() == unlabeled.x.cols(),
          "labeled and unlabeled covariate column counts differ");
  require(covariate_names.size() == p(),
          "covariate name count does not match covariate columns");
  if (unlabeled.y_true)
    require(unlabeled.y_true->size() == unlabeled.f.size(),
            "unlabeled true outcomes have the wrong length");
  require(p() >= 1, "at least one covariate column is required");
  if (n() < p() + 2 || N() < p() + 1) {
    std::ostringstream msg;
    msg << "too few rows: need n >= p + 2 and N >= p + 1 (n=" << n()
        << ", N=" << N() << ", p=" << p() << ")";
    throw DimensionError(msg.str());
  }
  if (has_intercept)
    require(first_column_is_ones(labeled.x) && first_column_is_ones(unlabeled.x),
            "intercept flagged but column 0 is not all ones");
}

Dataset make_dataset(RealVector labeled_y, const RealMatrix& labeled_x,
                     RealVector labeled_f, const RealMatrix& unlabeled_x,
                     RealVector unlabeled_f, bool add_intercept,
                     std::vector<std::string> covariate_names,
                     std::optional<RealVector> unlabeled_y_true) {
  require(labeled_x.cols() == unlabeled_x.cols(),
          "labeled and unlabeled covariate column counts differ");
  if (covariate_names.empty()) {
    for (Eigen::Index j = 0; j < labeled_x.cols(); ++j)
      covariate_names.push_back("x" + std::to_string(j + 1));
  }
  require(covariate_names.size() == std::size_t(labeled_x.cols()),
          "covariate name count does not match covariate columns");

  auto with_intercept = [&](const RealMatrix& x) {
    if (!add_intercept) return RealMatrix(x);
    RealMatrix out(x.rows(), x.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(x.cols()) = x;
    return out;
  };

  Dataset d;
  d.labeled = {std::move(labeled_y), with_intercept(labeled_x), std::move(labeled_f)};
  d.unlabeled = {with_intercept(unlabeled_x), std::move(unlabeled_f),
                 std::move(unlabeled_y_true)};
  d.has_intercept = add_intercept;
  if (add_intercept) d.covariate_names.emplace_back(kInterceptName);
  for (auto& name : covariate_names) d.covariate_names.push_back(std::move(name));
  d.validate();
  return d;
}

double critical_value(double alpha, std::optional<double> df) {
  require_alpha(alpha);
  if (df) {
    if (!(*df > 0.0)) throw std::invalid_argument("t reference needs df > 0");
    return boost::math::quantile(boost::math::students_t(*df), 1.0 - alpha / 2.0);
  }
  return boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
}

WaldInterval wald_interval(double beta, double se, double alpha,
                           std::optional<double> df) {
  if (!(se >= 0.0)) throw std::invalid_argument("wald_interval: se must be >= 0");
  const double crit = critical_value(alpha, df);
  WaldInterval w;
  w.low = beta - crit * se;
  w.high = beta + crit * se;
  if (se == 0.0) {
    w.p_value = beta == 0.0 ? 1.0 : 0.0;
  } else {
    w.p_value = std::min(1.0, 2.0 * upper_tail(std::abs(beta) / se, df));
  }
  return w;
}

ContrastInterval contrast_inference(const FitResult& result,
                                    const RealMatrix& covariance,
                                    const RealVector& c, double alpha) {
  const Eigen::Index p = result.beta.size();
  require(c.size() == p, "contrast_inference: contrast length mismatch");
  require(covariance.rows() == p && covariance.cols() == p,
          "contrast_inference: covariance shape mismatch");
  if (c.isZero(0.0)) throw std::invalid_argument("contrast_inference: zero contrast");
  const double variance = std::max(c.dot(covariance * c), 0.0);
  const double crit = critical_value(alpha, result.df);
  ContrastInterval out;
  out.estimate = c.dot(result.beta);
  out.low = out.estimate - crit * std::sqrt(variance);
  out.high = out.estimate + crit * std::sqrt(variance);
  return out;
}

double reference_df(Method method, const Dataset& data) {
  switch (method) {
    case Method::classical:
      return double(data.n()) - double(data.p());
    case Method::oracle:
    case Method::naive:
      return double(data.N()) - double(data.p());
    case Method::postpi:
    case Method::proposed:
      return double(data.n()) - 2.0;
  }
  return double(data.n()) - 2.0;
}

RelationshipFit fit_relationship(const RealVector& labeled_y,
                                 const RealVector& labeled_f) {
  require(labeled_y.size() == labeled_f.size(),
          "fit_relationship: y and f lengths differ");
  const Eigen::Index n = labeled_y.size();
  require(n >= 3, "fit_relationship: need at least 3 labeled rows");
  if (labeled_f.maxCoeff() == labeled_f.minCoeff())
    throw RankDeficientError(
        "fit_relationship: predictions are constant; relationship model is "
        "unidentified",
        1);
  RealMatrix design(n, 2);
  design.col(0).setOnes();
  design.col(1) = labeled_f;
  OlsFit fit;
  try {
    fit = ols_fit(design, labeled_y, std::size_t(n - 2));
  } catch (const RankDeficientError&) {
    throw RankDeficientError(
        "fit_relationship: predictions are numerically constant; relationship "
        "model is unidentified",
        1);
  }
  RelationshipFit rel;
  rel.gamma0 = fit.coefficients(0);
  rel.gamma1 = fit.coefficients(1);
  rel.residuals = std::move(fit.residuals);
  rel.sigma_r_sq = fit.residual_variance;
  return rel;
}

RealVector pseudo_outcomes(const RelationshipFit& fit, const RealVector& unlabeled_f) {
  return (fit.gamma1 * unlabeled_f.array() + fit.gamma0).matrix();
}

FitResult estimate_oracle(const Dataset& data, const InferenceOptions& options) {
  data.validate();
  if (!data.unlabeled.y_true)
    throw std::invalid_argument(
        "oracle: true unlabeled outcomes are not available for this dataset");
  return classical_ols(Method::oracle, data, data.unlabeled.x,
                       *data.unlabeled.y_true, options);
}

FitResult estimate_classical(const Dataset& data, const InferenceOptions& options) {
  data.validate();
  return classical_ols(Method::classical, data, data.labeled.x, data.labeled.y,
                       options);
}

FitResult estimate_naive(const Dataset& data, const InferenceOptions& options) {
  data.validate();
  return classical_ols(Method::naive, data, data.unlabeled.x, data.unlabeled.f,
                       options);
}

PostPiVarianceComponents postpi_variance_components(const Dataset& data,
                                                    const RelationshipFit& rel) {
  const OlsFit naive = ols_fit(data.unlabeled.x, data.unlabeled.f, data.N() - data.p());
  return {rel.sigma_r_sq, naive.residual_variance, rel.gamma1};
}

FitResult estimate_postpi(const Dataset& data, const RelationshipFit& rel,
                          const InferenceOptions& options) {
  data.validate();
  const RealMatrix& X = data.unlabeled.x;
  const OlsFit fit = ols_fit(X, pseudo_outcomes(rel, data.unlabeled.f),
                             data.N() - data.p());
  const PostPiVarianceComponents v = postpi_variance_components(data, rel);
  const double scale = v.sigma_r_sq + v.gamma1 * v.gamma1 * v.sigma_p_sq;
  return finish(Method::postpi, data, fit.coefficients, fit.gram_inverse * scale,
                options);
}

MomentSet compute_moments(const Dataset& data, const RelationshipFit& rel) {
  data.validate();
  require(rel.residuals.size() == data.labeled.y.size(),
          "compute_moments: relationship residuals do not match labeled rows");
  const RealMatrix& xu = data.unlabeled.x;
  const RealMatrix& xl = data.labeled.x;
  MomentSet m;
  m.c_xf_u = cross_moment_mean(xu, data.unlabeled.f);
  m.c_xeta_l = cross_moment_mean(xl, rel.residuals);
  m.m_xx_u = gram_mean(xu);
  m.s1_u = outer_moment(scale_rows(xu, data.unlabeled.f), /*centered=*/true);
  m.s2_l = outer_moment(scale_rows(xl, rel.residuals), /*centered=*/false);
  return m;
}

RealVector proposed_point_estimate(const MomentSet& moments,
                                   const RelationshipFit& rel,
                                   bool intercept_first) {
  const RealMatrix m_inv = spd_inverse(moments.m_xx_u);
  RealVector beta = m_inv * (rel.gamma1 * moments.c_xf_u + moments.c_xeta_l);
  if (intercept_first) beta(0) += rel.gamma0;
  return beta;
}

RealMatrix proposed_covariance(const MomentSet& moments, double gamma1,
                               std::size_t n, std::size_t N) {
  const RealMatrix m_inv = spd_inverse(moments.m_xx_u);
  const RealMatrix meat =
      gamma1 * gamma1 * moments.s1_u + (double(N) / double(n)) * moments.s2_l;
  RealMatrix cov = m_inv * meat * m_inv / double(N);
  cov = 0.5 * (cov + cov.transpose()).eval();
  return cov;
}

FitResult estimate_proposed(const Dataset& data, const RelationshipFit& rel,
                            const InferenceOptions& options) {
  const MomentSet moments = compute_moments(data, rel);
  RealVector beta;
  RealMatrix cov;
  try {
    beta = proposed_point_estimate(moments, rel, data.has_intercept);
    cov = proposed_covariance(moments, rel.gamma1, data.n(), data.N());
  } catch (const RankDeficientError& e) {
    std::ostringstream msg;
    msg << "proposed: unlabeled second-moment matrix is singular at covariate '"
        << data.covariate_names.at(e.column()) << "'";
    throw RankDeficientError(msg.str(), e.column());
  }
  return finish(Method::proposed, data, std::move(beta), std::move(cov), options);
}

FitResult estimate(Method method, const Dataset& data, const InferenceOptions& options) {
  switch (method) {
    case Method::oracle:
      return estimate_oracle(data, options);
    case Method::classical:
      return estimate_classical(data, options);
    case Method::naive:
      return estimate_naive(data, options);
    case Method::postpi:
      return estimate_postpi(data, fit_relationship(data.labeled.y, data.labeled.f),
                             options);
    case Method::proposed:
      return estimate_proposed(data, fit_relationship(data.labeled.y, data.labeled.f),
                               options);
  }
  throw std::invalid_argument("estimate: unknown method");
}

}  // namespace postpi
