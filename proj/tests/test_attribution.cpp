#include "lxdr/attribution.hpp"
#include "lxdr/data_io.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace lxdr;

TEST_SUITE("attribution") {

TEST_CASE("ridge predictor matches the closed form") {
  std::mt19937_64 rng(3);
  const Matrix xr = testing::random_matrix(50, 3, rng);
  const Vector y = xr * Vector::LinSpaced(3, 1.0, 3.0) + testing::random_vector(50, rng, 0.1);
  const RidgePredictor p = ridge_predictor_fit(xr, y, 0.5);
  const Matrix xc = xr.rowwise() - xr.colwise().mean();
  const Vector oracle = (xc.transpose() * xc + 0.5 * Matrix::Identity(3, 3)).ldlt().solve(xc.transpose() * (y.array() - y.mean()).matrix());
  CHECK((p.coefficients - oracle).norm() < 1e-10);
  CHECK(p.predict(xr.row(0).transpose()) == doctest::Approx(p.predict_rows(xr)[0]));
}

TEST_CASE("local attribution is coefficient times reduced value") {
  RidgePredictor p;
  p.coefficients = Vector::LinSpaced(3, 1.0, 3.0);
  p.intercept = 4.0;
  Vector xr(3);
  xr << 2.0, -1.0, 0.5;
  const Vector a = local_attribution(p, xr);
  CHECK(a[0] == 2.0);
  CHECK(a[1] == -2.0);
  CHECK(a[2] == 1.5);
  CHECK(a.sum() + p.intercept == doctest::Approx(p.predict(xr)));
}

TEST_CASE("propagated coefficients match central finite differences") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    const auto reducer = testing::random_affine(6, 3, rng);
    const Matrix data = testing::random_matrix(60, 6, rng);
    ExplainOptions o;
    o.neighborhood.k = 30;
    o.alpha_default = 0.0;
    const Vector x = data.row(trial).transpose();
    const Explanation e = lxdr_explain(reducer, data, x, o);
    RidgePredictor p;
    p.coefficients = testing::random_vector(3, rng);
    p.intercept = 0.3;

    const Vector grad = propagate_to_original(p.coefficients, e);
    auto f = [&](const Vector& v) {
      return p.predict(reducer.transform_rows(DataMatrix(v.transpose())).row(0).transpose());
    };
    const double h = 1e-5;
    for (Index j = 0; j < 6; ++j) {
      Vector up = x, down = x;
      up[j] += h;
      down[j] -= h;
      CHECK(std::abs(grad[j] - (f(up) - f(down)) / (2 * h)) < 1e-6);
    }
  }
}

TEST_CASE("attribution bundle") {
  std::mt19937_64 rng(2);
  const auto reducer = testing::random_affine(4, 2, rng);
  const Matrix data = testing::random_matrix(40, 4, rng);
  const Explanation e = gxdr_explain(reducer, data, 0.0);
  RidgePredictor p{Vector::Ones(2), 1.0, 1.0};
  const Vector xr = reducer.transform_rows(data.topRows(1)).row(0).transpose();
  const LocalAttribution a = attribute_prediction(p, xr, e);
  CHECK(a.reduced_contribution.size() == 2);
  CHECK(a.original_contribution.size() == 4);
  CHECK(a.prediction == doctest::Approx(xr.sum() + 1.0));
  CHECK((a.original_contribution - e.slopes.transpose() * a.reduced_contribution).norm() < 1e-12);
  CHECK_THROWS_AS(propagate_to_original(Vector::Ones(3), e), ShapeError);
}

TEST_CASE("whatif re-projects through the reducer") {
  const Dataset d = load_bundled("iris");
  const FittedDR r = fit_dr(DrKind::pca, d.features, 2, 0);
  const Vector x = d.features.row(10).transpose();

  const WhatIfResult same = whatif_tweak(r, nullptr, x, 2, x[2]);
  CHECK(same.x_reduced_before == same.x_reduced_after);
  CHECK_FALSE(same.prediction_before.has_value());

  const RidgePredictor p = ridge_predictor_fit(r.transform_rows(d.features), *d.target, 1.0);
  const WhatIfResult moved = whatif_tweak(r, &p, x, 2, x[2] + 1.0);
  CHECK(moved.old_value == x[2]);
  CHECK(moved.new_value == x[2] + 1.0);
  Vector x2 = x;
  x2[2] += 1.0;
  CHECK((moved.x_reduced_after - r.transform(x2)).norm() < 1e-12);
  REQUIRE(moved.prediction_after.has_value());
  CHECK(*moved.prediction_after == doctest::Approx(p.predict(r.transform(x2))));

  CHECK_THROWS_AS(whatif_tweak(r, nullptr, x, 4, 0.0), std::out_of_range);
  CHECK_THROWS_AS(whatif_tweak(r, nullptr, x, -1, 0.0), std::out_of_range);
}

TEST_CASE("attribution json") {
  RidgePredictor p{Vector::LinSpaced(3, 0.1, 0.3), 2.0, 0.5};
  const RidgePredictor back = ridge_predictor_from_json(to_json(p));
  CHECK(back.coefficients == p.coefficients);
  CHECK(back.intercept == p.intercept);
  CHECK(back.alpha == p.alpha);

  const Dataset d = load_bundled("iris");
  const FittedDR r = fit_dr(DrKind::pca, d.features, 2, 0);
  const auto doc = to_json(whatif_tweak(r, nullptr, d.features.row(0).transpose(), 0, 5.0));
  for (const char* key : {"feature", "old_value", "new_value", "before", "after"}) CHECK(doc.contains(key));
}

}
