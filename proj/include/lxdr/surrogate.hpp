#pragma once

// Local linear surrogates of a black-box reducer: one distance-weighted ridge
// regression per reduced dimension, fitted over a neighborhood of the query.

#include "lxdr/neighborhood.hpp"
#include "lxdr/types.hpp"

#include <json.hpp>

#include <concepts>
#include <optional>
#include <vector>

namespace lxdr {

/// Anything that maps a batch of N-dimensional rows to N_r-dimensional rows.
template <typename R>
concept BatchReducer = requires(const R& r, const DataMatrix& batch) {
  { r.transform_rows(batch) } -> std::convertible_to<DataMatrix>;
  { r.input_dims() } -> std::convertible_to<Index>;
  { r.reduced_dims() } -> std::convertible_to<Index>;
};

struct RidgeFit {
  Vector slope;
  double intercept = 0.0;
  double alpha = 0.0;
  // Set when alpha = 0 and the weighted design is rank deficient (least-norm solution).
  bool rank_deficient = false;
};

/// Several targets sharing one design: row k of `slopes` belongs to target column k.
struct MultiRidgeFit {
  Matrix slopes;  // targets x N
  Vector intercepts;
  double alpha = 0.0;
  bool rank_deficient = false;
};

/// Weighted, centred normal equations for one design matrix. Solving for a new
/// alpha or a new set of targets reuses the factor-independent parts.
class WeightedRidgeSolver {
 public:
  WeightedRidgeSolver(const Matrix& x, const Vector& sample_weights);

  /// Minimises sum_j w_j (s . x_j + c - t_j)^2 + alpha * |s|^2 for every target column.
  /// The intercept is not penalised.
  MultiRidgeFit solve(const Matrix& targets, double alpha) const;

  Index features() const { return x_mean_.size(); }

 private:
  Vector w_;
  Vector x_mean_;
  Matrix x_centered_;
  Matrix gram_;
};

RidgeFit weighted_ridge(const Matrix& x, const Vector& t, const Vector& sample_weights,
                        double alpha);

inline const std::vector<double>& default_alpha_grid() {
  static const std::vector<double> grid{1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
  return grid;
}

struct AlphaSelection {
  double alpha = 1.0;
  std::vector<double> grid;
  std::vector<double> held_out_error;  // aligned to grid; empty on fallback
  bool fallback = false;               // neighborhood too small to split
};

/// Held-out alpha selection over an 80/20 split of the neighborhood. Row 0 (the
/// query) always trains; every fifth row starting at row 4 is held out. Scores are
/// weighted squared errors summed over all reduced dimensions; ties go to the larger alpha.
AlphaSelection auto_alpha_select(const Matrix& neighborhood, const Matrix& neighborhood_reduced,
                                 const Vector& weights,
                                 const std::vector<double>& grid = default_alpha_grid(),
                                 double alpha_default = 1.0);

struct Explanation {
  Matrix slopes;  // N_r x N, rows = reduced dimensions
  Vector intercepts;
  double alpha = 1.0;
  bool auto_alpha = false;
  bool alpha_fallback = false;
  bool rank_deficient = false;
  std::optional<NgConfig> generator;  // unset for the global surrogate
  std::optional<Vector> query;
  Index neighborhood_size = 0;  // rows used for the fit

  Index reduced_dims() const { return slopes.rows(); }
  Index input_dims() const { return slopes.cols(); }
};

struct ExplainOptions {
  NgConfig neighborhood;
  bool auto_alpha = false;
  double alpha_default = 1.0;
  std::vector<double> alpha_grid = default_alpha_grid();
};

/// Fits the per-dimension surrogates for an already reduced neighborhood.
Explanation fit_local_surrogate(const Neighborhood& neighborhood, const Matrix& reduced,
                                const ExplainOptions& options);

template <BatchReducer R>
Explanation lxdr_explain(const R& reducer, const DataMatrix& data, const Vector& query,
                         const ExplainOptions& options = {}) {
  if (reducer.input_dims() != data.cols() || query.size() != data.cols()) {
    throw ShapeError("lxdr_explain: reducer expects " + std::to_string(reducer.input_dims()) +
                     " features, data has " + std::to_string(data.cols()) + ", query has " +
                     std::to_string(query.size()));
  }
  const Neighborhood nb = make_neighborhood(data, query, options.neighborhood);
  const Matrix reduced = reducer.transform_rows(nb.stacked());
  return fit_local_surrogate(nb, reduced, options);
}

/// Global baseline: unweighted ridge of the reducer's output over the whole dataset.
Explanation fit_global_surrogate(const DataMatrix& data, const Matrix& reduced,
                                 double alpha_default);

template <BatchReducer R>
Explanation gxdr_explain(const R& reducer, const DataMatrix& data, double alpha_default = 1.0) {
  if (reducer.input_dims() != data.cols()) {
    throw ShapeError("gxdr_explain: reducer expects " + std::to_string(reducer.input_dims()) +
                     " features, data has " + std::to_string(data.cols()));
  }
  return fit_global_surrogate(data, reducer.transform_rows(data), alpha_default);
}

/// slopes * x + intercepts
Vector explanation_predict(const Explanation& e, const Vector& x);

nlohmann::json to_json(const Explanation& e);
Explanation explanation_from_json(const nlohmann::json& doc);

}  // namespace lxdr
