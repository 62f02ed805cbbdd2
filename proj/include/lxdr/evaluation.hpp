#pragma once

// Surrogate-fidelity metrics, the synthetic dataset generator and the
// experiment runners that produce the CSV reports.

#include "lxdr/dr.hpp"
#include "lxdr/surrogate.hpp"
#include "lxdr/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lxdr {

/// sqrt(sum (y_i - y_hat_i)^2), over all entries when given matrices.
template <typename A, typename B>
double euclidean_distance(const Eigen::MatrixBase<A>& y, const Eigen::MatrixBase<B>& y_hat) {
  if (y.rows() != y_hat.rows() || y.cols() != y_hat.cols()) {
    throw ShapeError("euclidean_distance: shape " + shape_str(y.rows(), y.cols()) + " vs " +
                     shape_str(y_hat.rows(), y_hat.cols()));
  }
  return (y.derived() - y_hat.derived()).norm();
}

enum class Metric { instance_difference, weights_difference };
std::string_view to_string(Metric m);

struct MetricResult {
  Metric metric = Metric::instance_difference;
  double value = 0.0;
  double scaled_value = 0.0;  // 100 * value, display only

  static MetricResult make(Metric m, double value) { return {m, value, 100.0 * value}; }
};

/// ED between the surrogate's reduction of x and the reducer's own.
template <BatchReducer R>
MetricResult instance_difference(const R& reducer, const Explanation& e, const Vector& x) {
  require_length(x.size(), reducer.input_dims(), "instance_difference");
  const Vector truth = reducer.transform_rows(DataMatrix(x.transpose())).row(0).transpose();
  return MetricResult::make(Metric::instance_difference,
                            euclidean_distance(explanation_predict(e, x), truth));
}

/// ED over the flattened slope matrices; intercepts are not compared.
MetricResult weights_difference(const Explanation& e, const Matrix& reference);

// --- Synthetic data ----------------------------------------------------------

struct SyntheticSpec {
  Index n_rows = 1000;
  Index n_features = 10;  // multiple of 10 in [10, 250]
  double eigen_decay = 0.8;
  Seed seed = 0;
};

/// X = Z * Q^T diag(s) Q' with Z standard normal, Q, Q' random orthogonal and
/// s_j = eigen_decay^j, so covariance eigenvalues decay geometrically by eigen_decay^2.
DataMatrix synthetic_dataset(const SyntheticSpec& spec);

// --- Reports -----------------------------------------------------------------

struct ReportRow {
  std::string dataset;
  std::string dr_method;
  std::string explainer;  // "lxdr" or "gxdr"
  Index n_features = 0;
  Index n_reduced = 0;
  Index k = 0;  // 0 for the global surrogate
  Metric metric = Metric::instance_difference;
  double mean_value = 0.0;
  double mean_value_x100 = 0.0;
  double mean_seconds = 0.0;
  Index n_instances = 0;
  Index n_failures = 0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;

  static constexpr std::string_view csv_header =
      "dataset,dr_method,explainer,n_features,n_reduced,k,metric,mean_value,mean_value_x100,"
      "mean_seconds,n_failures";

  void write_csv(std::ostream& out) const;
  std::string to_csv() const;
  const ReportRow* find(std::string_view dataset, std::string_view dr_method,
                        std::string_view explainer, Metric metric,
                        std::optional<Index> k = std::nullopt) const;
};

struct TableDataset {
  std::string name;
  DataMatrix data;  // reducer training data and the explained instances
  std::optional<DataMatrix> neighbor_pool;  // KNN source; defaults to `data`
  Index k = 1;
  Index n_reduced = 0;  // 0: smallest N_r reaching the variance threshold under PCA
};

struct TableConfig {
  std::vector<DrKind> methods{DrKind::pca, DrKind::kpca_rbf, DrKind::autoencoder};
  Seed seed = 42;
  bool auto_alpha = true;
  double alpha_default = 1.0;
  double variance_threshold = 0.95;
  AutoencoderOptions autoencoder;
  bool record_timing = true;
  std::optional<Index> max_instances;
  unsigned threads = 1;
};

/// LXDR and GXDR on every instance of every dataset for every reducer. Weights
/// difference rows are emitted only for PCA, whose weights are intrinsic.
ExperimentReport run_table_experiment(const std::vector<TableDataset>& datasets,
                                      const TableConfig& config);

/// Iris (K = 50, N_r = 3), Diabetes (K = 150, N_r = 8) and a seeded 25% Digits
/// subsample (449 rows, K = 750 drawn from all 1797 rows, N_r = 25) with pixels scaled to [0, 1].
std::vector<TableDataset> bundled_table_datasets(Seed seed);

struct ScalingConfig {
  std::vector<Index> features = default_feature_grid();
  std::vector<Index> k_values{250, 500, 750};
  Index queries = 20;
  Index n_rows = 1000;
  double eigen_decay = 0.8;
  Seed seed = 42;
  bool auto_alpha = true;
  bool include_global = true;
  bool record_timing = true;

  static std::vector<Index> default_feature_grid();
};

/// PCA-reduced synthetic datasets explained at each K over a fixed query sample.
ExperimentReport run_scaling_experiment(const ScalingConfig& config);

}  // namespace lxdr
