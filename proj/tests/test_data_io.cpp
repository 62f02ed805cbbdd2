#include "lxdr/data_io.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace lxdr;

TEST_SUITE("data_io") {

TEST_CASE("csv with header, BOM and CRLF") {
  const Dataset d = parse_csv_text("\xEF\xBB\xBF" "a,b,c\r\n1,2,3\r\n\r\n4,5,6\r\n");
  CHECK(d.rows() == 2);
  CHECK(d.cols() == 3);
  CHECK(d.feature_names == std::vector<std::string>{"a", "b", "c"});
  CHECK(d.features(1, 2) == 6.0);
  CHECK_FALSE(d.target.has_value());
}

TEST_CASE("csv without header, target by name and by index") {
  CsvOptions no_header;
  no_header.has_header = false;
  const Dataset d = parse_csv_text("1,2\n3,4\n", no_header);
  CHECK(d.feature_names.size() == 2);
  CHECK(d.features(1, 0) == 3.0);

  CsvOptions by_name;
  by_name.target_column = "y";
  const Dataset t = parse_csv_text("x1,y,x2\n1,10,2\n3,30,4\n", by_name);
  CHECK(t.cols() == 2);
  REQUIRE(t.target.has_value());
  CHECK((*t.target)[1] == 30.0);
  CHECK(t.feature_names == std::vector<std::string>{"x1", "x2"});

  CsvOptions by_index;
  by_index.target_column = "0";
  const Dataset u = parse_csv_text("y,x\n5,1\n", by_index);
  CHECK((*u.target)[0] == 5.0);
  CHECK(u.features(0, 0) == 1.0);
}

TEST_CASE("csv errors carry line and column") {
  try {
    parse_csv_text("a,b\n1,2\n3,oops\n");
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 2);
  }
  try {
    parse_csv_text("a,b\n1,2\n3\n");
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_csv_text(""), CsvError);
  CHECK_THROWS_AS(parse_csv_text("a,b\n"), CsvError);
  CsvOptions bad_target;
  bad_target.target_column = "zzz";
  CHECK_THROWS(parse_csv_text("a,b\n1,2\n", bad_target));
}

TEST_CASE("csv write and read back") {
  Dataset d = parse_csv_text("p,q\n0.1,0.2\n1e-300,-3.5\n");
  d.target = Vector::LinSpaced(2, 7.0, 8.0);
  std::ostringstream os;
  write_csv(os, d);
  CsvOptions o;
  o.target_column = "target";
  const Dataset back = parse_csv_text(os.str(), o);
  CHECK(back.features == d.features);
  CHECK(*back.target == *d.target);
}

TEST_CASE("bundled datasets") {
  const Dataset iris = load_bundled("iris");
  CHECK(iris.rows() == 150);
  CHECK(iris.cols() == 4);
  const Dataset diabetes = load_bundled("diabetes");
  CHECK(diabetes.rows() == 442);
  CHECK(diabetes.cols() == 10);
  CHECK(diabetes.target.has_value());
  CHECK(std::abs(diabetes.features.col(0).mean()) < 1e-6);
  const Dataset digits = load_bundled("digits");
  CHECK(digits.rows() == 1797);
  CHECK(digits.cols() == 64);
  CHECK(digits.features.maxCoeff() == 16.0);
  CHECK(is_bundled_name("iris"));
  CHECK_FALSE(is_bundled_name("mnist"));
  CHECK_THROWS(load_bundled("mnist"));
}

TEST_CASE("subsample is seeded, sorted and sized by rounding") {
  const Dataset digits = load_bundled("digits");
  const Dataset a = subsample(digits, 0.25, 42);
  const Dataset b = subsample(digits, 0.25, 42);
  const Dataset c = subsample(digits, 0.25, 43);
  CHECK(a.rows() == 449);
  CHECK(a.features == b.features);
  CHECK(a.features != c.features);
  CHECK(subsample(digits, 1.0, 1).features == digits.features);
  CHECK_THROWS(subsample(digits, 0.0, 1));
}

TEST_CASE("train/test split partitions the rows") {
  const Dataset d = load_bundled("diabetes");
  const Split s = train_test_split(d, {0.8, 42});
  CHECK(s.train.rows() == 354);
  CHECK(s.test.rows() == 88);
  std::set<Index> all(s.train_rows.begin(), s.train_rows.end());
  all.insert(s.test_rows.begin(), s.test_rows.end());
  CHECK(all.size() == 442);
  CHECK(s.train.features.row(0) == d.features.row(s.train_rows[0]));
  CHECK((*s.test.target)[0] == (*d.target)[s.test_rows[0]]);
  CHECK(train_test_split(d, {0.8, 42}).train_rows == s.train_rows);
}

TEST_CASE("standardize handles constant columns") {
  Dataset d = parse_csv_text("a,b\n1,5\n2,5\n3,5\n");
  const auto [z, st] = standardize(d);
  CHECK(z.features.col(0).mean() == doctest::Approx(0.0));
  CHECK((z.features.col(1).array() == 0.0).all());
  CHECK(st.constant == std::vector<bool>{false, true});
  CHECK((st.invert(z.features) - d.features).cwiseAbs().maxCoeff() < 1e-12);
}

}
