#pragma once

// Reduced-space attributions of a downstream linear predictor, their
// propagation to the original features, and what-if feature tweaks.

#include "lxdr/dr.hpp"
#include "lxdr/surrogate.hpp"

#include <json.hpp>

#include <optional>

namespace lxdr {

struct RidgePredictor {
  Vector coefficients;  // N_r
  double intercept = 0.0;
  double alpha = 1.0;

  double predict(const Vector& x_reduced) const;
  Vector predict_rows(const DataMatrix& x_reduced) const;
};

RidgePredictor ridge_predictor_fit(const DataMatrix& x_reduced, const Vector& y, double alpha = 1.0);

/// coef (element-wise) x_reduced
Vector local_attribution(const RidgePredictor& predictor, const Vector& x_reduced);

/// attr^T * slopes: each original feature's share summed over the reduced dimensions.
Vector propagate_to_original(const Vector& attr, const Explanation& explanation);

struct LocalAttribution {
  Vector reduced_contribution;
  Vector original_contribution;
  Vector model_coefficients;
  double prediction = 0.0;
};

LocalAttribution attribute_prediction(const RidgePredictor& predictor, const Vector& x_reduced,
                                      const Explanation& explanation);

struct WhatIfResult {
  Index feature = 0;
  double old_value = 0.0;
  double new_value = 0.0;
  Vector x_reduced_before;
  Vector x_reduced_after;
  std::optional<double> prediction_before;
  std::optional<double> prediction_after;
};

/// Overwrites one feature of `x` and re-projects through the true reducer.
WhatIfResult whatif_tweak(const FittedDR& reducer, const RidgePredictor* predictor,
                          const Vector& x, Index feature, double new_value);

nlohmann::json to_json(const LocalAttribution& a);
nlohmann::json to_json(const WhatIfResult& r);
nlohmann::json to_json(const RidgePredictor& p);
RidgePredictor ridge_predictor_from_json(const nlohmann::json& doc);

}  // namespace lxdr
