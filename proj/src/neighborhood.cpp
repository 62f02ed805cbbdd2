#include "lxdr/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace lxdr {

std::string_view to_string(NeighborGenerator g) {
  return g == NeighborGenerator::knn ? "knn" : "perturbation";
}

NeighborGenerator parse_neighbor_generator(std::string_view name) {
  if (name == "knn") return NeighborGenerator::knn;
  if (name == "perturbation" || name == "perturb" || name == "lime") {
    return NeighborGenerator::perturbation;
  }
  throw std::invalid_argument("unknown neighborhood generator '" + std::string(name) + "'");
}

Index NgConfig::resolve_k(Index dataset_rows) const {
  if (k) return *k;
  return std::max<Index>(1, static_cast<Index>(std::lround(0.1 * static_cast<double>(dataset_rows))));
}

Matrix Neighborhood::stacked() const {
  Matrix b(neighbors.rows() + 1, query.size());
  b.row(0) = query.transpose();
  b.bottomRows(neighbors.rows()) = neighbors;
  return b;
}

namespace {

void check_query(const DataMatrix& data, const Vector& query, const char* who) {
  require_length(query.size(), data.cols(), who);
  require_finite(query, "query");
}

}  // namespace

Neighborhood knn_neighbors(const DataMatrix& data, const Vector& query, Index k) {
  check_query(data, query, "knn_neighbors");
  if (k < 1) throw std::invalid_argument("knn_neighbors: k must be >= 1, got " + std::to_string(k));
  if (k > data.rows()) {
    throw std::invalid_argument("knn_neighbors: k = " + std::to_string(k) +
                                " exceeds the dataset rows (" + std::to_string(data.rows()) + ")");
  }

  const Vector dist2 = (data.rowwise() - query.transpose()).rowwise().squaredNorm();
  std::vector<Index> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&dist2](Index a, Index b) {
    return dist2[a] < dist2[b] || (dist2[a] == dist2[b] && a < b);
  });
  order.resize(static_cast<std::size_t>(k));

  Neighborhood nb;
  nb.query = query;
  nb.generator = NeighborGenerator::knn;
  nb.neighbors.resize(k, data.cols());
  for (Index i = 0; i < k; ++i) nb.neighbors.row(i) = data.row(order[static_cast<std::size_t>(i)]);
  nb.source_rows = std::move(order);
  nb.weights = neighbor_weights(nb.query, nb.neighbors);
  return nb;
}

Neighborhood perturbation_neighbors(const DataMatrix& data, const Vector& query, Index k,
                                    Seed seed, double scale) {
  check_query(data, query, "perturbation_neighbors");
  if (data.rows() < 2) throw std::invalid_argument("perturbation_neighbors: need at least 2 rows");
  if (k < 1) throw std::invalid_argument("perturbation_neighbors: k must be >= 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("perturbation_neighbors: scale must be positive");
  }

  const Vector mean = data.colwise().mean().transpose();
  const Vector sigma =
      ((data.rowwise() - mean.transpose()).colwise().squaredNorm().transpose() /
       static_cast<double>(data.rows() - 1))
          .cwiseSqrt();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Neighborhood nb;
  nb.query = query;
  nb.generator = NeighborGenerator::perturbation;
  nb.neighbors.resize(k, data.cols());
  for (Index i = 0; i < k; ++i) {
    for (Index f = 0; f < data.cols(); ++f) {
      const double eps = normal(rng);
      nb.neighbors(i, f) = sigma[f] > 0.0 ? query[f] + scale * sigma[f] * eps : query[f];
    }
  }
  nb.weights = neighbor_weights(nb.query, nb.neighbors);
  return nb;
}

Neighborhood make_neighborhood(const DataMatrix& data, const Vector& query,
                               const NgConfig& config) {
  const Index k = config.resolve_k(data.rows());
  if (config.generator == NeighborGenerator::knn) return knn_neighbors(data, query, k);
  return perturbation_neighbors(data, query, k, config.seed, config.perturbation_scale);
}

}  // namespace lxdr
