#pragma once

// Local neighborhoods around a query instance and their distance weights.

#include "lxdr/types.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace lxdr {

enum class NeighborGenerator { knn, perturbation };

std::string_view to_string(NeighborGenerator g);
/// "knn", "perturbation" (aliases: "perturb", "lime").
NeighborGenerator parse_neighbor_generator(std::string_view name);

struct NgConfig {
  NeighborGenerator generator = NeighborGenerator::knn;
  std::optional<Index> k;  // unset: 10% of the dataset rows
  Seed seed = 0;
  double perturbation_scale = 1.0;

  Index resolve_k(Index dataset_rows) const;
};

struct Neighborhood {
  Vector query;                // N
  Matrix neighbors;            // K x N
  Vector weights;              // K + 1, aligned to [query; neighbors]
  NeighborGenerator generator = NeighborGenerator::knn;
  std::vector<Index> source_rows;  // dataset rows of the neighbors (knn only)

  Index size() const { return neighbors.rows(); }
  /// [query; neighbors] as a (K + 1) x N matrix.
  Matrix stacked() const;
};

/// w_i = exp(-2 * d_i) for each neighbor row; entry 0 is the query's own weight 1.
template <typename QueryDerived, typename NeighborsDerived>
Vector neighbor_weights(const Eigen::MatrixBase<QueryDerived>& query,
                        const Eigen::MatrixBase<NeighborsDerived>& neighbors) {
  if (neighbors.cols() != query.size()) {
    throw ShapeError("neighbor_weights: neighbors have " + std::to_string(neighbors.cols()) +
                     " columns, query has " + std::to_string(query.size()));
  }
  Vector w(neighbors.rows() + 1);
  w[0] = 1.0;
  for (Index i = 0; i < neighbors.rows(); ++i) {
    const double d = (neighbors.row(i) - query.transpose()).norm();
    w[i + 1] = std::exp(-2.0 * d);
  }
  return w;
}

/// The k rows of `data` closest to `query` in Euclidean distance; ties go to the lower row.
Neighborhood knn_neighbors(const DataMatrix& data, const Vector& query, Index k);

/// k synthetic rows query + eps, eps_f ~ Normal(0, (scale * sigma_f)^2) with sigma_f the
/// per-feature sample standard deviation of `data`. Constant features stay at the query value.
Neighborhood perturbation_neighbors(const DataMatrix& data, const Vector& query, Index k,
                                    Seed seed, double scale = 1.0);

Neighborhood make_neighborhood(const DataMatrix& data, const Vector& query,
                               const NgConfig& config);

}  // namespace lxdr
