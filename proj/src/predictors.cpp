#include "postpi/predictors.hpp"

#include <sstream>

namespace postpi {

PredictionModel::PredictionModel(State state) : state_(std::move(state)) {
  if (const auto* e = std::get_if<ExternalModel>(&state_)) {
    if (e->prediction_column >= e->n_features)
      throw std::invalid_argument(
          "ExternalModel: prediction column is outside the feature columns");
  }
}

ModelKind PredictionModel::kind() const noexcept {
  switch (state_.index()) {
    case 0:
      return ModelKind::spline_additive;
    case 1:
      return ModelKind::random_forest;
    default:
      return ModelKind::external;
  }
}

std::size_t PredictionModel::n_features() const noexcept {
  if (const auto* s = std::get_if<SplineAdditiveModel>(&state_)) return s->bases.size();
  if (const auto* f = std::get_if<RandomForestModel>(&state_)) return f->n_features;
  return std::get<ExternalModel>(state_).n_features;
}

RealVector predict(const PredictionModel& model, const RealMatrix& Z) {
  if (static_cast<std::size_t>(Z.cols()) != model.n_features()) {
    std::ostringstream msg;
    msg << "predict: model was trained on " << model.n_features()
        << " columns, got " << Z.cols();
    throw DimensionError(msg.str());
  }
  if (!Z.allFinite()) throw std::invalid_argument("predict: non-finite input");

  if (const auto* spline = std::get_if<SplineAdditiveModel>(&model.state()))
    return spline->design(Z) * spline->coefficients;

  if (const auto* forest = std::get_if<RandomForestModel>(&model.state())) {
    RealVector out = RealVector::Zero(Z.rows());
    const Eigen::Index stride = Z.outerStride();
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      double sum = 0.0;
      for (const auto& tree : forest->trees) sum += tree.predict(&Z(i, 0), stride);
      out(i) = sum / double(forest->trees.size());
    }
    return out;
  }

  const auto& external = std::get<ExternalModel>(model.state());
  return Z.col(Eigen::Index(external.prediction_column));
}

}  // namespace postpi
