#include "lxdr/data_io.hpp"
#include "lxdr/evaluation.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace lxdr;

TEST_SUITE("evaluation") {

TEST_CASE("euclidean distance is zero iff equal") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const Matrix a = testing::random_matrix(3, 4, rng);
    CHECK(euclidean_distance(a, a) == 0.0);
    Matrix b = a;
    b(i % 3, i % 4) += 1e-9;
    CHECK(euclidean_distance(a, b) > 0.0);
    CHECK(euclidean_distance(a, b) == euclidean_distance(b, a));
  }
  CHECK_THROWS_AS(euclidean_distance(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), ShapeError);
  Vector u(2), v(2);
  u << 0, 0;
  v << 3, 4;
  CHECK(euclidean_distance(u, v) == 5.0);
}

TEST_CASE("metric display scaling") {
  const MetricResult m = MetricResult::make(Metric::weights_difference, 0.0123);
  CHECK(m.scaled_value == doctest::Approx(1.23));
  CHECK(to_string(m.metric) == "weights_difference");
}

TEST_CASE("instance and weights difference vanish for an exact surrogate") {
  std::mt19937_64 rng(6);
  const auto reducer = testing::random_affine(5, 2, rng);
  const Matrix data = testing::random_matrix(50, 5, rng);
  ExplainOptions o;
  o.neighborhood.k = 20;
  o.alpha_default = 0.0;
  const Vector x = data.row(0).transpose();
  const Explanation e = lxdr_explain(reducer, data, x, o);
  CHECK(instance_difference(reducer, e, x).value < 1e-10);
  CHECK(weights_difference(e, reducer.a).value < 1e-10);
  CHECK(weights_difference(e, reducer.a * 2.0).value > 0.1);
}

TEST_CASE("synthetic data: shape, seed and spectrum") {
  const SyntheticSpec spec{400, 20, 0.8, 3};
  const DataMatrix a = synthetic_dataset(spec);
  CHECK(a.rows() == 400);
  CHECK(a.cols() == 20);
  CHECK(a == synthetic_dataset(spec));
  CHECK(a != synthetic_dataset({400, 20, 0.8, 4}));
  const Vector r = pca_variance_ratios(a);
  CHECK(r[1] / r[0] == doctest::Approx(0.64).epsilon(0.25));
  CHECK_THROWS(synthetic_dataset({100, 15, 0.8, 0}));
  CHECK_THROWS(synthetic_dataset({100, 260, 0.8, 0}));
}

TEST_CASE("table report: structure and byte-identical reruns") {
  const Dataset iris = load_bundled("iris");
  std::vector<TableDataset> ds{{"iris", iris.features, std::nullopt, 50, 3}};
  TableConfig c;
  c.record_timing = false;
  c.max_instances = 12;
  c.autoencoder.epochs = 20;
  const ExperimentReport a = run_table_experiment(ds, c);
  c.threads = 3;
  const ExperimentReport b = run_table_experiment(ds, c);
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.to_csv().rfind(std::string(ExperimentReport::csv_header) + "\n", 0) == 0);
  CHECK(a.rows.size() == 8);
  const ReportRow* lx = a.find("iris", "pca", "lxdr", Metric::weights_difference);
  const ReportRow* gx = a.find("iris", "pca", "gxdr", Metric::weights_difference);
  REQUIRE(lx);
  REQUIRE(gx);
  CHECK(lx->k == 50);
  CHECK(gx->k == 0);
  CHECK(lx->mean_seconds == 0.0);
  CHECK(lx->mean_value < gx->mean_value);
  CHECK(a.find("iris", "kpca-rbf", "lxdr", Metric::weights_difference) == nullptr);
}

TEST_CASE("bundled table datasets") {
  const auto ds = bundled_table_datasets(42);
  REQUIRE(ds.size() == 3);
  CHECK(ds[0].k == 50);
  CHECK(ds[1].k == 150);
  CHECK(ds[2].data.rows() == 449);
  REQUIRE(ds[2].neighbor_pool.has_value());
  CHECK(ds[2].neighbor_pool->rows() == 1797);
  CHECK(ds[2].k == 750);
  CHECK(ds[2].n_reduced == 25);
}

TEST_CASE("scaling report grid") {
  ScalingConfig c;
  c.features = {10, 20};
  c.k_values = {50, 100};
  c.queries = 3;
  c.n_rows = 200;
  c.record_timing = false;
  const ExperimentReport r = run_scaling_experiment(c);
  CHECK(r.rows.size() == 2 * (2 * 2 + 2));
  CHECK(r.find("synthetic-20", "pca", "lxdr", Metric::weights_difference, 100) != nullptr);
  CHECK(r.to_csv() == run_scaling_experiment(c).to_csv());
}

}
