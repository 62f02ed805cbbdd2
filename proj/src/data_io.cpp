#include "lxdr/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#ifndef LXDR_DEFAULT_DATA_DIR
#define LXDR_DEFAULT_DATA_DIR "data"
#endif

namespace lxdr {

Dataset Dataset::select_rows(const std::vector<Index>& rows) const {
  Dataset out;
  out.name = name;
  out.feature_names = feature_names;
  out.features.resize(static_cast<Index>(rows.size()), cols());
  Vector t;
  if (target) t.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    if (r < 0 || r >= this->rows()) throw std::out_of_range("row index " + std::to_string(r));
    out.features.row(static_cast<Index>(i)) = features.row(r);
    if (target) t[static_cast<Index>(i)] = (*target)[r];
  }
  if (target) out.target = std::move(t);
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::optional<double> parse_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (ec != std::errc() || ptr != end || cell.empty() || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

Dataset parse_csv(std::istream& in, const CsvOptions& options, std::string name) {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::string line;
  Index line_no = 0;
  std::size_t width = 0;
  bool first = true;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (first && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (trim(view).empty()) continue;
    const auto cells = split_line(view);
    if (first) {
      first = false;
      width = cells.size();
      if (options.has_header) {
        for (auto c : cells) header.push_back(unquote(c));
        continue;
      }
    }
    if (cells.size() != width) {
      throw CsvError("ragged row: line " + std::to_string(line_no) + " has " +
                         std::to_string(cells.size()) + " cells, expected " + std::to_string(width),
                     line_no, static_cast<Index>(std::min(cells.size(), width)) + 1);
    }
    std::vector<double> values;
    values.reserve(width);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = parse_number(cells[c]);
      if (!v) {
        throw CsvError("non-numeric value '" + std::string(cells[c]) + "' at line " +
                           std::to_string(line_no) + ", column " + std::to_string(c + 1),
                       line_no, static_cast<Index>(c + 1));
      }
      values.push_back(*v);
    }
    rows.push_back(std::move(values));
  }
  if (first) throw CsvError("empty CSV input", 0, 0);
  if (rows.empty()) throw CsvError("CSV has a header but no data rows", line_no, 0);
  if (header.empty()) {
    for (std::size_t c = 0; c < width; ++c) header.push_back("f" + std::to_string(c));
  }

  std::optional<std::size_t> target_col;
  if (options.target_column) {
    const auto& spec = *options.target_column;
    const auto it = std::find(header.begin(), header.end(), spec);
    if (it != header.end()) {
      target_col = static_cast<std::size_t>(it - header.begin());
    } else {
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), idx);
      if (ec != std::errc() || ptr != spec.data() + spec.size() || idx >= width) {
        throw std::invalid_argument("target column '" + spec + "' not found");
      }
      target_col = idx;
    }
  }
  if (target_col && width < 2) throw std::invalid_argument("CSV needs a feature column besides the target");

  Dataset d;
  d.name = std::move(name);
  const auto n_rows = static_cast<Index>(rows.size());
  const auto n_cols = static_cast<Index>(width - (target_col ? 1 : 0));
  d.features.resize(n_rows, n_cols);
  Vector target(target_col ? n_rows : 0);
  for (Index r = 0; r < n_rows; ++r) {
    Index out_c = 0;
    for (std::size_t c = 0; c < width; ++c) {
      const double v = rows[static_cast<std::size_t>(r)][c];
      if (target_col && c == *target_col) {
        target[r] = v;
      } else {
        d.features(r, out_c++) = v;
      }
    }
  }
  for (std::size_t c = 0; c < width; ++c) {
    if (!target_col || c != *target_col) d.feature_names.push_back(header[c]);
  }
  if (target_col) d.target = std::move(target);
  return d;
}

Dataset parse_csv_text(const std::string& text, const CsvOptions& options, std::string name) {
  std::istringstream in(text);
  return parse_csv(in, options, std::move(name));
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataLoadError("cannot open CSV file " + path.string());
  try {
    return parse_csv(in, options, path.stem().string());
  } catch (const CsvError& e) {
    throw CsvError(path.string() + ": " + e.what(), e.line(), e.column());
  }
}

void write_csv(std::ostream& out, const Dataset& d) {
  for (std::size_t c = 0; c < d.feature_names.size(); ++c) {
    if (c) out << ',';
    out << d.feature_names[c];
  }
  if (d.target) out << ",target";
  out << '\n' << std::setprecision(17);
  for (Index r = 0; r < d.rows(); ++r) {
    for (Index c = 0; c < d.cols(); ++c) {
      if (c) out << ',';
      out << d.features(r, c);
    }
    if (d.target) out << ',' << (*d.target)[r];
    out << '\n';
  }
}

std::filesystem::path bundled_data_dir() {
  if (const char* env = std::getenv("LXDR_DATA_DIR"); env && *env) return env;
  return LXDR_DEFAULT_DATA_DIR;
}

bool is_bundled_name(const std::string& name) {
  return name == "iris" || name == "diabetes" || name == "digits";
}

Dataset load_bundled(const std::string& name) {
  if (!is_bundled_name(name)) {
    throw std::invalid_argument("unknown bundled dataset '" + name + "' (iris, diabetes, digits)");
  }
  const auto path = bundled_data_dir() / (name + ".csv");
  Dataset d;
  try {
    d = load_csv(path, {true, std::string("target")});
  } catch (const std::exception& e) {
    throw DataLoadError("failed to load bundled dataset from " + path.string() + ": " + e.what());
  }
  d.name = name;
  return d;
}

Dataset subsample(const Dataset& d, double fraction, Seed seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("subsample: fraction must be in (0, 1]");
  }
  if (fraction == 1.0) return d;
  const auto n = std::max<Index>(1, static_cast<Index>(std::lround(fraction * static_cast<double>(d.rows()))));
  std::vector<Index> order(static_cast<std::size_t>(d.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(static_cast<std::size_t>(n));
  std::sort(order.begin(), order.end());
  return d.select_rows(order);
}

Split train_test_split(const Dataset& d, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw std::invalid_argument("train_test_split: train_fraction must be in (0, 1)");
  }
  const auto n_train = static_cast<Index>(std::lround(spec.train_fraction * static_cast<double>(d.rows())));
  if (n_train < 1 || n_train >= d.rows()) {
    throw std::invalid_argument("train_test_split: both partitions must be non-empty");
  }
  std::vector<Index> order(static_cast<std::size_t>(d.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  Split s;
  s.train_rows.assign(order.begin(), order.begin() + n_train);
  s.test_rows.assign(order.begin() + n_train, order.end());
  s.train = d.select_rows(s.train_rows);
  s.test = d.select_rows(s.test_rows);
  return s;
}

DataMatrix Standardization::apply(const DataMatrix& x) const {
  require_length(x.cols(), mean.size(), "standardization input");
  DataMatrix z = (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  for (std::size_t c = 0; c < constant.size(); ++c) {
    if (constant[c]) z.col(static_cast<Index>(c)).setZero();
  }
  return z;
}

DataMatrix Standardization::invert(const DataMatrix& z) const {
  require_length(z.cols(), mean.size(), "standardization input");
  return (z.array().rowwise() * scale.transpose().array()).matrix().rowwise() + mean.transpose();
}

std::pair<Dataset, Standardization> standardize(const Dataset& d) {
  if (d.rows() < 2) throw std::invalid_argument("standardize: need at least 2 rows");
  Standardization s;
  s.mean = d.features.colwise().mean().transpose();
  s.scale = ((d.features.rowwise() - s.mean.transpose()).colwise().squaredNorm().transpose() /
             static_cast<double>(d.rows() - 1))
                .cwiseSqrt();
  s.constant.resize(static_cast<std::size_t>(d.cols()));
  for (Index c = 0; c < d.cols(); ++c) {
    s.constant[static_cast<std::size_t>(c)] = !(s.scale[c] > 0.0);
    if (s.constant[static_cast<std::size_t>(c)]) s.scale[c] = 1.0;
  }
  Dataset out = d;
  out.features = s.apply(d.features);
  return {std::move(out), std::move(s)};
}

}  // namespace lxdr
