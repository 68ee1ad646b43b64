#include "postpi/simulation.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace postpi {

namespace {

// Child stream purposes inside one replicate.
constexpr std::uint64_t kCovariatePurpose = 10;
constexpr std::uint64_t kNoisePurpose = 20;
constexpr std::uint64_t kForestPurpose = 30;
constexpr std::uint64_t kPredictionNoisePurpose = 40;

SimSplit draw_setting12(const RngSeed& seed, std::uint64_t split, std::size_t m,
                        double beta1, double noise_sd) {
  const RealVector normals =
      sample_standard_normal(derive_seed(seed, kCovariatePurpose + split), 4 * m);
  const RealVector eps =
      sample_standard_normal(derive_seed(seed, kNoisePurpose + split), m);
  SimSplit out;
  out.z.resize(Eigen::Index(m), 4);
  out.y.resize(Eigen::Index(m));
  out.mean.resize(Eigen::Index(m));
  for (Eigen::Index i = 0; i < Eigen::Index(m); ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) out.z(i, j) = normals(4 * i + j);
    const RealVector row = out.z.row(i).transpose();
    out.mean(i) = setting12_outcome(beta1, row, 0.0);
    out.y(i) = setting12_outcome(beta1, row, noise_sd * eps(i));
  }
  return out;
}

SimSplit draw_setting3(const RngSeed& seed, std::uint64_t split, std::size_t m,
                       double beta1, double noise_sd, double rho) {
  SimSplit out;
  out.z = sample_bivariate_normal(derive_seed(seed, kCovariatePurpose + split), m, rho);
  const RealVector eps =
      sample_standard_normal(derive_seed(seed, kNoisePurpose + split), m);
  out.y.resize(Eigen::Index(m));
  out.mean.resize(Eigen::Index(m));
  for (Eigen::Index i = 0; i < Eigen::Index(m); ++i) {
    out.mean(i) = setting3_outcome(beta1, out.z(i, 0), out.z(i, 1), 0.0);
    out.y(i) = setting3_outcome(beta1, out.z(i, 0), out.z(i, 1), noise_sd * eps(i));
  }
  return out;
}

void require_counts(const SplitCounts& c) {
  if (c.n_t == 0 || c.n == 0 || c.N == 0)
    throw std::invalid_argument("split sizes must all be positive");
}

RealVector mean_predictions(const SimSetting& s, const SimSplit& split) {
  if (s.predictor == PredictorSource::feature_mean && s.setting_id == 3)
    return (s.beta1 + s.rho) * split.z.col(0);
  return split.mean;
}

}  // namespace

std::string_view predictor_source_name(PredictorSource source) noexcept {
  switch (source) {
    case PredictorSource::trained:
      return "trained";
    case PredictorSource::feature_mean:
      return "feature_mean";
    case PredictorSource::full_mean:
      return "full_mean";
  }
  return "unknown";
}

std::optional<PredictorSource> parse_predictor_source(std::string_view name) noexcept {
  for (auto s : {PredictorSource::trained, PredictorSource::feature_mean,
                 PredictorSource::full_mean})
    if (predictor_source_name(s) == name) return s;
  return std::nullopt;
}

SimSetting SimSetting::defaults(int setting_id, double beta1) {
  SimSetting s;
  s.setting_id = setting_id;
  s.beta1 = beta1;
  switch (setting_id) {
    case 1:
      s.counts = {500, 500, 500};
      s.noise_sd = 2.0;
      break;
    case 2:
      s.counts = {500, 500, 1000};
      s.noise_sd = 2.0;
      break;
    case 3:
      s.counts = {500, 500, 1000};
      s.noise_sd = 1.0;
      break;
    default: {
      std::ostringstream msg;
      msg << "unknown setting " << setting_id << " (expected 1, 2 or 3)";
      throw std::invalid_argument(msg.str());
    }
  }
  return s;
}

void SimSetting::validate() const {
  if (setting_id < 1 || setting_id > 3) {
    std::ostringstream msg;
    msg << "unknown setting " << setting_id << " (expected 1, 2 or 3)";
    throw std::invalid_argument(msg.str());
  }
  require_counts(counts);
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
    throw std::invalid_argument("noise_sd must be finite and >= 0");
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("|rho| must be < 1");
  if (!(predictor_noise_sd >= 0.0))
    throw std::invalid_argument("predictor_noise_sd must be >= 0");
  if (!std::isfinite(beta1)) throw std::invalid_argument("beta1 must be finite");
}

double setting12_outcome(double beta1, const RealVector& z, double eps) {
  if (z.size() != 4) throw DimensionError("setting12_outcome: need 4 covariates");
  return beta1 * z(0) + 0.5 * z(1) + 3.0 * z(2) * z(2) * z(2) + 4.0 * z(3) * z(3) +
         eps;
}

double setting3_outcome(double beta1, double z1, double z2, double eps) {
  return beta1 * z1 + z2 + eps;
}

SimData generate_setting12(const RngSeed& seed, const SplitCounts& counts,
                           double beta1, double noise_sd) {
  require_counts(counts);
  return {draw_setting12(seed, 0, counts.n_t, beta1, noise_sd),
          draw_setting12(seed, 1, counts.n, beta1, noise_sd),
          draw_setting12(seed, 2, counts.N, beta1, noise_sd)};
}

SimData generate_setting3(const RngSeed& seed, const SplitCounts& counts,
                          double beta1, double noise_sd, double rho) {
  require_counts(counts);
  return {draw_setting3(seed, 0, counts.n_t, beta1, noise_sd, rho),
          draw_setting3(seed, 1, counts.n, beta1, noise_sd, rho),
          draw_setting3(seed, 2, counts.N, beta1, noise_sd, rho)};
}

SimData generate(const SimSetting& setting, const RngSeed& seed) {
  setting.validate();
  if (setting.setting_id == 3)
    return generate_setting3(seed, setting.counts, setting.beta1, setting.noise_sd,
                             setting.rho);
  return generate_setting12(seed, setting.counts, setting.beta1, setting.noise_sd);
}

RealMatrix inference_covariates(int setting_id, const RealMatrix& z) {
  return setting_id == 3 ? RealMatrix(z.leftCols(2)) : RealMatrix(z.leftCols(1));
}

RealMatrix predictor_features(int setting_id, const RealMatrix& z) {
  return setting_id == 3 ? RealMatrix(z.leftCols(1)) : RealMatrix(z);
}

ReplicateData prepare_replicate(const SimSetting& setting, const RngSeed& seed) {
  ReplicateData out;
  out.data = generate(setting, seed);
  const SimData& d = out.data;
  const int id = setting.setting_id;

  if (setting.predictor == PredictorSource::trained) {
    const RealMatrix train_features = predictor_features(id, d.train.z);
    const PredictionModel model = [&] {
      if (id == 3) {
        RandomForestConfig forest = setting.forest;
        forest.seed = derive_seed(seed, kForestPurpose);
        return train_random_forest(train_features, d.train.y, forest);
      }
      return train_spline_additive(train_features, d.train.y, setting.spline);
    }();
    out.labeled_f = predict(model, predictor_features(id, d.labeled.z));
    out.unlabeled_f = predict(model, predictor_features(id, d.unlabeled.z));
  } else {
    out.labeled_f = mean_predictions(setting, d.labeled);
    out.unlabeled_f = mean_predictions(setting, d.unlabeled);
    if (setting.predictor_noise_sd > 0.0) {
      const Eigen::Index n = out.labeled_f.size();
      const RealVector noise = sample_standard_normal(
          derive_seed(seed, kPredictionNoisePurpose),
          std::size_t(n + out.unlabeled_f.size()));
      out.labeled_f += setting.predictor_noise_sd * noise.head(n);
      out.unlabeled_f += setting.predictor_noise_sd * noise.tail(out.unlabeled_f.size());
    }
  }

  std::vector<std::string> names = {"Z1"};
  if (id == 3) names.push_back("Z2");
  out.dataset = make_dataset(d.labeled.y, inference_covariates(id, d.labeled.z),
                             out.labeled_f, inference_covariates(id, d.unlabeled.z),
                             out.unlabeled_f, /*add_intercept=*/true, names,
                             d.unlabeled.y);
  return out;
}

ReplicateRecord run_replicate(const SimSetting& setting, std::size_t rep_index,
                              std::uint64_t base_seed,
                              const std::vector<Method>& methods,
                              const InferenceOptions& options) {
  ReplicateRecord record;
  record.rep_index = rep_index;
  record.seed = RngSeed{base_seed, rep_index};

  std::string prepare_error;
  ReplicateData rep;
  try {
    rep = prepare_replicate(setting, record.seed);
  } catch (const std::exception& e) {
    prepare_error = e.what();
  }

  for (Method m : methods) {
    MethodOutcome o;
    o.method = m;
    if (!prepare_error.empty()) {
      o.error = prepare_error;
      record.outcomes.push_back(std::move(o));
      continue;
    }
    try {
      const FitResult fit = estimate(m, rep.dataset, options);
      const Eigen::Index k = kTargetCoefficient;
      o.estimate = fit.beta(k);
      o.se = fit.se(k);
      o.ci_low = fit.ci_low(k);
      o.ci_high = fit.ci_high(k);
      o.p_value = fit.p_value(k);
      o.ok = std::isfinite(o.estimate) && std::isfinite(o.se);
      if (!o.ok) o.error = "non-finite estimate";
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    record.outcomes.push_back(std::move(o));
  }
  return record;
}

std::vector<MetricsRow> aggregate_metrics(const std::vector<ReplicateRecord>& records,
                                          const std::vector<Method>& methods,
                                          double beta1, double alpha) {
  // Containment allows for rounding so that exact fits (se == 0) cover.
  const double guard = 1e-12 * (1.0 + std::abs(beta1));
  std::vector<MetricsRow> rows;
  for (Method m : methods) {
    MetricsRow row;
    row.method = m;
    double err_sum = 0.0, sq_sum = 0.0, width_sum = 0.0;
    std::size_t covered = 0, rejected = 0;
    for (const auto& rec : records) {
      for (const auto& o : rec.outcomes) {
        if (o.method != m) continue;
        if (!o.ok) {
          ++row.n_failed;
          continue;
        }
        ++row.n_reps;
        const double err = o.estimate - beta1;
        err_sum += err;
        sq_sum += err * err;
        width_sum += o.ci_high - o.ci_low;
        if (o.ci_low - guard <= beta1 && beta1 <= o.ci_high + guard) ++covered;
        if (o.p_value < alpha) ++rejected;
      }
    }
    if (row.n_reps == 0) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.bias = row.mse = row.mean_ci_width = row.coverage = row.rejection_rate = nan;
    } else {
      const double count = double(row.n_reps);
      row.bias = err_sum / count;
      row.mse = sq_sum / count;
      row.mean_ci_width = width_sum / count;
      row.coverage = double(covered) / count;
      row.rejection_rate = double(rejected) / count;
    }
    rows.push_back(row);
  }
  return rows;
}

MonteCarloResult run_monte_carlo(const SimSetting& setting, std::size_t n_reps,
                                 std::uint64_t base_seed,
                                 const std::vector<Method>& methods,
                                 const InferenceOptions& options, std::size_t threads) {
  setting.validate();
  if (n_reps < 1) throw std::invalid_argument("run_monte_carlo: need at least 1 replicate");
  if (methods.empty()) throw std::invalid_argument("run_monte_carlo: no methods requested");
  if (!(options.alpha > 0.0 && options.alpha < 1.0))
    throw std::invalid_argument("run_monte_carlo: alpha must lie in (0, 1)");

  MonteCarloResult result;
  result.setting = setting;
  result.n_reps = n_reps;
  result.base_seed = base_seed;
  result.options = options;
  result.methods = methods;
  result.records.resize(n_reps);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_reps; i = next++)
      result.records[i] = run_replicate(setting, i, base_seed, methods, options);
  };
  threads = std::max<std::size_t>(1, std::min(threads, n_reps));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  result.rows = aggregate_metrics(result.records, methods, setting.beta1, options.alpha);
  return result;
}

}  // namespace postpi
