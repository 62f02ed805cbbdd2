#include "lxdr/surrogate.hpp"

#include "lxdr/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lxdr {

WeightedRidgeSolver::WeightedRidgeSolver(const Matrix& x, const Vector& sample_weights)
    : w_(sample_weights) {
  if (x.rows() < 2) {
    throw std::invalid_argument("weighted ridge: need at least 2 rows, got " +
                                std::to_string(x.rows()));
  }
  require_length(w_.size(), x.rows(), "weighted ridge sample weights");
  require_finite(x, "weighted ridge design");
  if (!all_finite(w_) || (w_.array() <= 0.0).any()) {
    throw std::invalid_argument("weighted ridge: sample weights must be positive and finite");
  }
  const double total = w_.sum();
  x_mean_ = x.transpose() * w_ / total;
  x_centered_ = x.rowwise() - x_mean_.transpose();
  gram_ = x_centered_.transpose() * w_.asDiagonal() * x_centered_;
}

MultiRidgeFit WeightedRidgeSolver::solve(const Matrix& targets, double alpha) const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("weighted ridge: alpha must be a non-negative finite number");
  }
  require_length(targets.rows(), x_centered_.rows(), "weighted ridge targets");
  require_finite(targets, "weighted ridge targets");

  const Vector t_mean = targets.transpose() * w_ / w_.sum();
  const Matrix t_centered = targets.rowwise() - t_mean.transpose();

  MultiRidgeFit fit;
  fit.alpha = alpha;
  Matrix solution;  // N x targets
  if (alpha > 0.0) {
    Matrix system = gram_;
    system.diagonal().array() += alpha;
    const Matrix rhs = x_centered_.transpose() * w_.asDiagonal() * t_centered;
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() == Eigen::Success) {
      solution = llt.solve(rhs);
    } else {
      solution = system.completeOrthogonalDecomposition().solve(rhs);
    }
  } else {
    // Least-squares on the sqrt-weighted design; least-norm when rank deficient.
    const Vector root = w_.cwiseSqrt();
    const Matrix design = root.asDiagonal() * x_centered_;
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design);
    solution = cod.solve(root.asDiagonal() * t_centered);
    fit.rank_deficient = cod.rank() < x_centered_.cols();
  }
  fit.slopes = solution.transpose();
  fit.intercepts = t_mean - fit.slopes * x_mean_;
  return fit;
}

RidgeFit weighted_ridge(const Matrix& x, const Vector& t, const Vector& sample_weights,
                        double alpha) {
  const MultiRidgeFit multi = WeightedRidgeSolver(x, sample_weights).solve(t, alpha);
  return {multi.slopes.row(0).transpose(), multi.intercepts[0], alpha, multi.rank_deficient};
}

namespace {

bool held_out_row(Index i) { return i >= 4 && (i - 4) % 5 == 0; }

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

Vector take(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
  return out;
}

}  // namespace

AlphaSelection auto_alpha_select(const Matrix& neighborhood, const Matrix& neighborhood_reduced,
                                 const Vector& weights, const std::vector<double>& grid,
                                 double alpha_default) {
  if (grid.empty()) throw std::invalid_argument("auto alpha: grid must not be empty");
  for (double a : grid) {
    if (!(a >= 0.0) || !std::isfinite(a)) {
      throw std::invalid_argument("auto alpha: grid values must be non-negative and finite");
    }
  }
  const Index m = neighborhood.rows();
  require_length(neighborhood_reduced.rows(), m, "auto alpha reduced neighborhood");
  require_length(weights.size(), m, "auto alpha weights");

  AlphaSelection sel;
  sel.grid = grid;
  if (m < 5) {
    sel.alpha = alpha_default;
    sel.fallback = true;
    return sel;
  }

  std::vector<Index> train, test;
  for (Index i = 0; i < m; ++i) (held_out_row(i) ? test : train).push_back(i);

  const WeightedRidgeSolver solver(take_rows(neighborhood, train), take(weights, train));
  const Matrix test_x = take_rows(neighborhood, test);
  const Matrix test_t = take_rows(neighborhood_reduced, test);
  const Vector test_w = take(weights, test);

  sel.held_out_error.reserve(grid.size());
  for (double a : grid) {
    const MultiRidgeFit fit = solver.solve(take_rows(neighborhood_reduced, train), a);
    const Matrix pred = (test_x * fit.slopes.transpose()).rowwise() + fit.intercepts.transpose();
    sel.held_out_error.push_back(
        (test_w.asDiagonal() * (pred - test_t).cwiseAbs2()).sum());
  }

  // Scores equal up to rounding count as ties; the tolerance scales with the
  // held-out targets' own weighted spread.
  const Vector t_mean = test_t.transpose() * test_w / test_w.sum();
  const double spread =
      (test_w.asDiagonal() * (test_t.rowwise() - t_mean.transpose()).cwiseAbs2()).sum();
  const double best = *std::min_element(sel.held_out_error.begin(), sel.held_out_error.end());
  const double tol = 1e-12 * (best + spread);

  sel.alpha = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (sel.held_out_error[i] <= best + tol) sel.alpha = std::max(sel.alpha, grid[i]);
  }
  return sel;
}

Explanation fit_local_surrogate(const Neighborhood& neighborhood, const Matrix& reduced,
                                const ExplainOptions& options) {
  const Matrix b = neighborhood.stacked();
  if (b.rows() < 2) {
    throw std::invalid_argument("lxdr: insufficient neighborhood (need the query plus at least one neighbor)");
  }
  require_length(reduced.rows(), b.rows(), "reduced neighborhood");

  Explanation e;
  e.auto_alpha = options.auto_alpha;
  e.alpha = options.alpha_default;
  if (options.auto_alpha) {
    const AlphaSelection sel = auto_alpha_select(b, reduced, neighborhood.weights,
                                                 options.alpha_grid, options.alpha_default);
    e.alpha = sel.alpha;
    e.alpha_fallback = sel.fallback;
  }
  const MultiRidgeFit fit = WeightedRidgeSolver(b, neighborhood.weights).solve(reduced, e.alpha);
  e.slopes = fit.slopes;
  e.intercepts = fit.intercepts;
  e.rank_deficient = fit.rank_deficient;
  e.generator = options.neighborhood;
  e.query = neighborhood.query;
  e.neighborhood_size = b.rows();
  return e;
}

Explanation fit_global_surrogate(const DataMatrix& data, const Matrix& reduced,
                                 double alpha_default) {
  const MultiRidgeFit fit =
      WeightedRidgeSolver(data, Vector::Ones(data.rows())).solve(reduced, alpha_default);
  Explanation e;
  e.slopes = fit.slopes;
  e.intercepts = fit.intercepts;
  e.alpha = alpha_default;
  e.rank_deficient = fit.rank_deficient;
  e.neighborhood_size = data.rows();
  return e;
}

Vector explanation_predict(const Explanation& e, const Vector& x) {
  require_length(x.size(), e.input_dims(), "explanation_predict");
  return e.slopes * x + e.intercepts;
}

nlohmann::json to_json(const Explanation& e) {
  Json doc = {{"slopes", matrix_to_json(e.slopes)},
              {"intercepts", vector_to_json(e.intercepts)},
              {"alpha", e.alpha},
              {"auto_alpha", e.auto_alpha},
              {"alpha_fallback", e.alpha_fallback},
              {"rank_deficient", e.rank_deficient},
              {"orientation", "components_by_features"},
              {"neighborhood_size", e.neighborhood_size}};
  if (e.generator) {
    const NgConfig& g = *e.generator;
    doc["generator"] = {{"kind", to_string(g.generator)},
                        {"k", g.k ? Json(*g.k) : Json(nullptr)},
                        {"seed", g.seed},
                        {"perturbation_scale", g.perturbation_scale}};
  } else {
    doc["generator"] = nullptr;
  }
  doc["query"] = e.query ? vector_to_json(*e.query) : Json(nullptr);
  return doc;
}

Explanation explanation_from_json(const nlohmann::json& doc) {
  if (doc.value("orientation", std::string("components_by_features")) != "components_by_features") {
    throw std::invalid_argument("explanation: unsupported slope orientation");
  }
  Explanation e;
  e.slopes = matrix_from_json(doc.at("slopes"));
  e.intercepts = vector_from_json(doc.at("intercepts"));
  require_length(e.intercepts.size(), e.slopes.rows(), "explanation intercepts");
  e.alpha = doc.at("alpha").get<double>();
  e.auto_alpha = doc.value("auto_alpha", false);
  e.alpha_fallback = doc.value("alpha_fallback", false);
  e.rank_deficient = doc.value("rank_deficient", false);
  e.neighborhood_size = doc.value("neighborhood_size", Index{0});
  if (const auto it = doc.find("generator"); it != doc.end() && !it->is_null()) {
    NgConfig g;
    g.generator = parse_neighbor_generator(it->at("kind").get<std::string>());
    if (!it->at("k").is_null()) g.k = it->at("k").get<Index>();
    g.seed = it->at("seed").get<Seed>();
    g.perturbation_scale = it->at("perturbation_scale").get<double>();
    e.generator = g;
  }
  if (const auto it = doc.find("query"); it != doc.end() && !it->is_null()) {
    e.query = vector_from_json(*it);
  }
  return e;
}

}  // namespace lxdr
