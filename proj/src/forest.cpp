#include "postpi/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace postpi {

namespace {

constexpr std::uint64_t kTreeStreamPurpose = 0x7472656573ull;  // "trees"

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const RealMatrix& Z, const RealVector& y, std::size_t min_leaf,
              std::size_t mtry, CounterRng& rng)
      : Z_(Z), y_(y), min_leaf_(min_leaf), mtry_(mtry), rng_(rng) {
    features_.resize(std::size_t(Z.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  RegressionTree build(std::vector<Eigen::Index> rows) {
    rows_ = std::move(rows);
    tree_.nodes.clear();
    struct Pending {
      int node;
      std::size_t begin, end;
    };
    std::vector<Pending> stack;
    tree_.nodes.push_back({});
    stack.push_back({0, 0, rows_.size()});
    while (!stack.empty()) {
      const Pending job = stack.back();
      stack.pop_back();
      const SplitChoice split = best_split(job.begin, job.end);
      if (split.feature < 0) {
        tree_.nodes[std::size_t(job.node)].value = mean(job.begin, job.end);
        continue;
      }
      const auto mid_it = std::stable_partition(
          rows_.begin() + std::ptrdiff_t(job.begin), rows_.begin() + std::ptrdiff_t(job.end),
          [&](Eigen::Index r) { return Z_(r, split.feature) <= split.threshold; });
      const auto mid = std::size_t(mid_it - rows_.begin());
      const int left = int(tree_.nodes.size());
      tree_.nodes.push_back({});
      tree_.nodes.push_back({});
      TreeNode& node = tree_.nodes[std::size_t(job.node)];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({left + 1, mid, job.end});
      stack.push_back({left, job.begin, mid});
    }
    return std::move(tree_);
  }

 private:
  double mean(std::size_t begin, std::size_t end) const {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += y_(rows_[i]);
    return s / double(end - begin);
  }

  SplitChoice best_split(std::size_t begin, std::size_t end) {
    SplitChoice best;
    const std::size_t count = end - begin;
    if (count < 2 * min_leaf_) return best;

    double total = 0.0, total_sq = 0.0, lo = y_(rows_[begin]), hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = y_(rows_[i]);
      total += v;
      total_sq += v * v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo == hi) return best;
    const double parent_score = total * total / double(count);
    // Gains below this are rounding noise.
    const double min_gain = 1e-12 * std::max(total_sq - parent_score, 0.0);

    // Partial Fisher-Yates: the first mtry entries are this node's features.
    for (std::size_t k = 0; k < mtry_; ++k) {
      const auto pick = k + std::size_t(rng_.below(features_.size() - k));
      std::swap(features_[k], features_[pick]);
    }

    std::vector<std::pair<double, double>> column(count);
    for (std::size_t k = 0; k < mtry_; ++k) {
      const int f = features_[k];
      for (std::size_t i = 0; i < count; ++i) {
        const Eigen::Index r = rows_[begin + i];
        column[i] = {Z_(r, f), y_(r)};
      }
      std::sort(column.begin(), column.end());
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < count; ++i) {
        left_sum += column[i].second;
        const std::size_t n_left = i + 1;
        if (n_left < min_leaf_) continue;
        if (count - n_left < min_leaf_) break;
        if (column[i].first == column[i + 1].first) continue;
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / double(n_left) +
                             right_sum * right_sum / double(count - n_left);
        const double gain = score - parent_score;
        if (gain > best.gain && gain > min_gain) {
          best.gain = gain;
          best.feature = f;
          const double a = column[i].first, b = column[i + 1].first;
          double t = 0.5 * (a + b);
          if (!(t >= a && t < b)) t = a;
          best.threshold = t;
        }
      }
    }
    return best;
  }

  const RealMatrix& Z_;
  const RealVector& y_;
  std::size_t min_leaf_;
  std::size_t mtry_;
  CounterRng& rng_;
  std::vector<int> features_;
  std::vector<Eigen::Index> rows_;
  RegressionTree tree_;
};

}  // namespace

double RegressionTree::predict(const double* row, Eigen::Index stride) const {
  std::size_t at = 0;
  while (nodes[at].feature >= 0) {
    const TreeNode& node = nodes[at];
    at = std::size_t(row[node.feature * stride] <= node.threshold ? node.left
                                                                  : node.right);
  }
  return nodes[at].value;
}

PredictionModel train_random_forest(const RealMatrix& Z, const RealVector& y,
                                    const RandomForestConfig& config) {
  if (Z.rows() != y.size())
    throw DimensionError("train_random_forest: Z and y row counts differ");
  if (Z.cols() == 0) throw DimensionError("train_random_forest: Z has no columns");
  if (!Z.allFinite() || !y.allFinite())
    throw std::invalid_argument("train_random_forest: non-finite input");
  const auto q = std::size_t(Z.cols());
  const auto n = std::size_t(Z.rows());
  if (config.n_trees < 1)
    throw std::invalid_argument("train_random_forest: n_trees must be >= 1");
  if (config.min_leaf < 1)
    throw std::invalid_argument("train_random_forest: min_leaf must be >= 1");
  const std::size_t mtry = config.mtry.value_or(std::max<std::size_t>(1, q / 3));
  if (mtry < 1 || mtry > q) {
    std::ostringstream msg;
    msg << "train_random_forest: mtry must lie in [1, " << q << "], got " << mtry;
    throw std::invalid_argument(msg.str());
  }
  if (n < 2 * config.min_leaf) {
    std::ostringstream msg;
    msg << "train_random_forest: need at least " << 2 * config.min_leaf
        << " rows for min_leaf " << config.min_leaf << ", got " << n;
    throw DimensionError(msg.str());
  }

  // Canonical row order (lexicographic on Z then y) makes the forest a
  // function of the training multiset, not of the input row order.
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < Z.cols(); ++j)
      if (Z(a, j) != Z(b, j)) return Z(a, j) < Z(b, j);
    return y(a) < y(b);
  });
  RealMatrix Zc(Z.rows(), Z.cols());
  RealVector yc(y.size());
  for (std::size_t i = 0; i < n; ++i) {
    Zc.row(Eigen::Index(i)) = Z.row(order[i]);
    yc(Eigen::Index(i)) = y(order[i]);
  }

  RandomForestModel model;
  model.n_features = q;
  model.trees.reserve(config.n_trees);
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    CounterRng rng(derive_seed(config.seed, kTreeStreamPurpose, t));
    std::vector<Eigen::Index> rows(n);
    if (config.bootstrap) {
      for (auto& r : rows) r = Eigen::Index(rng.below(n));
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    }
    TreeBuilder builder(Zc, yc, config.min_leaf, mtry, rng);
    model.trees.push_back(builder.build(std::move(rows)));
  }
  return PredictionModel(std::move(model));
}

}  // namespace postpi
