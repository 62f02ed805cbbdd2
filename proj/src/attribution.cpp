#include "lxdr/attribution.hpp"

#include "lxdr/json_io.hpp"

namespace lxdr {

double RidgePredictor::predict(const Vector& x_reduced) const {
  require_length(x_reduced.size(), coefficients.size(), "ridge predictor input");
  return coefficients.dot(x_reduced) + intercept;
}

Vector RidgePredictor::predict_rows(const DataMatrix& x_reduced) const {
  require_length(x_reduced.cols(), coefficients.size(), "ridge predictor input");
  return (x_reduced * coefficients).array() + intercept;
}

RidgePredictor ridge_predictor_fit(const DataMatrix& x_reduced, const Vector& y, double alpha) {
  require_length(y.size(), x_reduced.rows(), "ridge predictor targets");
  const RidgeFit fit = weighted_ridge(x_reduced, y, Vector::Ones(y.size()), alpha);
  return {fit.slope, fit.intercept, alpha};
}

Vector local_attribution(const RidgePredictor& predictor, const Vector& x_reduced) {
  require_length(x_reduced.size(), predictor.coefficients.size(), "local_attribution");
  require_finite(x_reduced, "reduced instance");
  return predictor.coefficients.cwiseProduct(x_reduced);
}

Vector propagate_to_original(const Vector& attr, const Explanation& explanation) {
  require_length(attr.size(), explanation.reduced_dims(), "propagate_to_original");
  return explanation.slopes.transpose() * attr;
}

LocalAttribution attribute_prediction(const RidgePredictor& predictor, const Vector& x_reduced,
                                      const Explanation& explanation) {
  LocalAttribution a;
  a.reduced_contribution = local_attribution(predictor, x_reduced);
  a.original_contribution = propagate_to_original(a.reduced_contribution, explanation);
  a.model_coefficients = predictor.coefficients;
  a.prediction = predictor.predict(x_reduced);
  return a;
}

WhatIfResult whatif_tweak(const FittedDR& reducer, const RidgePredictor* predictor,
                          const Vector& x, Index feature, double new_value) {
  require_length(x.size(), reducer.input_dims(), "whatif instance");
  if (feature < 0 || feature >= x.size()) {
    throw std::out_of_range("whatif: feature index " + std::to_string(feature) +
                            " out of range for " + std::to_string(x.size()) + " features");
  }
  if (!std::isfinite(new_value)) throw std::invalid_argument("whatif: new value must be finite");

  WhatIfResult r;
  r.feature = feature;
  r.old_value = x[feature];
  r.new_value = new_value;
  Vector tweaked = x;
  tweaked[feature] = new_value;
  r.x_reduced_before = reducer.transform(x);
  r.x_reduced_after = reducer.transform(tweaked);
  if (predictor) {
    r.prediction_before = predictor->predict(r.x_reduced_before);
    r.prediction_after = predictor->predict(r.x_reduced_after);
  }
  return r;
}

nlohmann::json to_json(const LocalAttribution& a) {
  return {{"reduced", vector_to_json(a.reduced_contribution)},
          {"original", vector_to_json(a.original_contribution)},
          {"coefficients", vector_to_json(a.model_coefficients)},
          {"prediction", a.prediction}};
}

nlohmann::json to_json(const WhatIfResult& r) {
  Json doc = {{"feature", r.feature},
              {"old_value", r.old_value},
              {"new_value", r.new_value},
              {"before", vector_to_json(r.x_reduced_before)},
              {"after", vector_to_json(r.x_reduced_after)}};
  if (r.prediction_before) doc["prediction_before"] = *r.prediction_before;
  if (r.prediction_after) doc["prediction_after"] = *r.prediction_after;
  return doc;
}

nlohmann::json to_json(const RidgePredictor& p) {
  return {{"coefficients", vector_to_json(p.coefficients)},
          {"intercept", p.intercept},
          {"alpha", p.alpha}};
}

RidgePredictor ridge_predictor_from_json(const nlohmann::json& doc) {
  return {vector_from_json(doc.at("coefficients")), doc.at("intercept").get<double>(),
          doc.value("alpha", 1.0)};
}

}  // namespace lxdr
