#pragma once

#include "lxdr/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lxdr {

struct Dataset {
  std::string name;
  DataMatrix features;
  std::optional<Vector> target;
  std::vector<std::string> feature_names;

  Index rows() const { return features.rows(); }
  Index cols() const { return features.cols(); }
  /// Keeps the given rows, in the given order.
  Dataset select_rows(const std::vector<Index>& rows) const;
};

/// Parse failure carrying the 1-based line and column of the offending cell.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, Index line, Index column)
      : std::runtime_error(what), line_(line), column_(column) {}
  Index line() const { return line_; }
  Index column() const { return column_; }

 private:
  Index line_;
  Index column_;
};

class DataLoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvOptions {
  bool has_header = true;
  // Column holding the target; a header name or a 0-based index as text.
  std::optional<std::string> target_column;
};

Dataset parse_csv(std::istream& in, const CsvOptions& options = {}, std::string name = "csv");
Dataset parse_csv_text(const std::string& text, const CsvOptions& options = {},
                       std::string name = "csv");
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Header plus rows at 17 significant digits; the target (if any) goes last as "target".
void write_csv(std::ostream& out, const Dataset& d);

/// Directory holding the bundled snapshots: $LXDR_DATA_DIR if set, else the build-time default.
std::filesystem::path bundled_data_dir();
bool is_bundled_name(const std::string& name);
/// iris (150x4), diabetes (442x10) or digits (1797x64), target included.
Dataset load_bundled(const std::string& name);

/// Seeded uniform sample without replacement of round(fraction * rows) rows; rows keep
/// their original relative order. fraction = 1 returns the dataset unchanged.
Dataset subsample(const Dataset& d, double fraction, Seed seed);

struct SplitSpec {
  double train_fraction = 0.8;
  Seed seed = 0;
};

struct Split {
  Dataset train;
  Dataset test;
  std::vector<Index> train_rows;
  std::vector<Index> test_rows;
};

/// Seeded shuffle, then the first round(train_fraction * rows) rows train.
Split train_test_split(const Dataset& d, const SplitSpec& spec);

struct Standardization {
  Vector mean;
  Vector scale;                // 1 for constant features
  std::vector<bool> constant;  // features with zero standard deviation

  DataMatrix apply(const DataMatrix& x) const;
  DataMatrix invert(const DataMatrix& z) const;
};

std::pair<Dataset, Standardization> standardize(const Dataset& d);

}  // namespace lxdr
