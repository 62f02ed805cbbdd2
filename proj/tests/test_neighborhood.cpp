#include "lxdr/neighborhood.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace lxdr;

TEST_SUITE("neighborhood") {

TEST_CASE("weights are exp(-2d) with the query at 1") {
  Vector q(2);
  q << 0.0, 0.0;
  Matrix nb(3, 2);
  nb << 1.0, 0.0,  //
      0.0, 2.0,    //
      3.0, 4.0;
  const Vector w = neighbor_weights(q, nb);
  REQUIRE(w.size() == 4);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == doctest::Approx(std::exp(-2.0)));
  CHECK(w[2] == doctest::Approx(std::exp(-4.0)));
  CHECK(w[3] == doctest::Approx(std::exp(-10.0)));
}

TEST_CASE("weights fall monotonically with distance and stay in (0, 1]") {
  std::mt19937_64 rng(7);
  const Vector q = testing::random_vector(5, rng);
  const Matrix nb = testing::random_matrix(200, 5, rng, 0.3);
  const Vector w = neighbor_weights(q, nb);
  std::vector<std::pair<double, double>> dw;
  for (Index i = 0; i < nb.rows(); ++i) dw.emplace_back((nb.row(i) - q.transpose()).norm(), w[i + 1]);
  std::sort(dw.begin(), dw.end());
  for (std::size_t i = 0; i < dw.size(); ++i) {
    CHECK(dw[i].second > 0.0);
    CHECK(dw[i].second <= 1.0);
    if (i > 0) CHECK(dw[i].second <= dw[i - 1].second);
  }
  Vector same = q;
  CHECK(neighbor_weights(q, Matrix(same.transpose()))[1] == 1.0);
}

TEST_CASE("knn matches brute force") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix data = testing::random_matrix(60, 4, rng);
    const Vector q = testing::random_vector(4, rng);
    const Index k = 1 + trial * 5;
    const Neighborhood nb = knn_neighbors(data, q, k);

    std::vector<Index> order(60);
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return (data.row(a) - q.transpose()).squaredNorm() < (data.row(b) - q.transpose()).squaredNorm();
    });
    order.resize(static_cast<std::size_t>(k));
    std::vector<Index> got = nb.source_rows;
    std::sort(got.begin(), got.end());
    std::sort(order.begin(), order.end());
    CHECK(got == order);
    REQUIRE(nb.size() == k);
    for (Index i = 0; i < k; ++i) CHECK(nb.neighbors.row(i) == data.row(nb.source_rows[i]));
    CHECK(nb.weights.size() == k + 1);
  }
}

TEST_CASE("knn breaks distance ties by row index") {
  Matrix data(4, 1);
  data << 1.0, -1.0, 1.0, -1.0;
  const Neighborhood nb = knn_neighbors(data, Vector::Zero(1), 2);
  std::vector<Index> rows = nb.source_rows;
  std::sort(rows.begin(), rows.end());
  CHECK(rows == std::vector<Index>{0, 1});
}

TEST_CASE("knn rejects k beyond the data, naming both numbers") {
  const Matrix data = Matrix::Zero(5, 2);
  try {
    knn_neighbors(data, Vector::Zero(2), 6);
    FAIL("expected an exception");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    CHECK(msg.find('6') != std::string::npos);
    CHECK(msg.find('5') != std::string::npos);
  }
  CHECK_THROWS(knn_neighbors(data, Vector::Zero(3), 2));
}

TEST_CASE("perturbation is seeded and leaves constant features alone") {
  std::mt19937_64 rng(3);
  Matrix data = testing::random_matrix(50, 3, rng);
  data.col(1).setConstant(4.0);
  const Vector q = data.row(0).transpose();
  const Neighborhood a = perturbation_neighbors(data, q, 30, 99);
  const Neighborhood b = perturbation_neighbors(data, q, 30, 99);
  const Neighborhood c = perturbation_neighbors(data, q, 30, 100);
  CHECK(a.neighbors == b.neighbors);
  CHECK(a.neighbors != c.neighbors);
  CHECK((a.neighbors.col(1).array() == 4.0).all());
  CHECK(a.source_rows.empty());
  CHECK(a.generator == NeighborGenerator::perturbation);
}

TEST_CASE("default k is 10% of the rows") {
  NgConfig c;
  CHECK(c.resolve_k(442) == 44);
  CHECK(c.resolve_k(150) == 15);
  CHECK(c.resolve_k(3) == 1);
  c.k = 7;
  CHECK(c.resolve_k(442) == 7);
}

TEST_CASE("generator names") {
  CHECK(parse_neighbor_generator("knn") == NeighborGenerator::knn);
  CHECK(parse_neighbor_generator("perturb") == NeighborGenerator::perturbation);
  CHECK(parse_neighbor_generator("lime") == NeighborGenerator::perturbation);
  CHECK_THROWS_AS(parse_neighbor_generator("pca"), std::invalid_argument);
}

TEST_CASE("stacked puts the query first") {
  Matrix data(3, 2);
  data << 0, 0, 1, 1, 5, 5;
  Vector q(2);
  q << 0.5, 0.5;
  const Neighborhood nb = knn_neighbors(data, q, 2);
  const Matrix s = nb.stacked();
  CHECK(s.rows() == 3);
  CHECK(s.row(0) == q.transpose());
}

}
