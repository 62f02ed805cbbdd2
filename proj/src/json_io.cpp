#include "lxdr/json_io.hpp"

namespace lxdr {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Matrix matrix_from_json(const Json& j, Index cols) {
  if (!j.is_array()) throw std::invalid_argument("expected a nested list for a matrix");
  const auto rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix(0, cols < 0 ? 0 : cols);
  const auto width = static_cast<Index>(j.front().size());
  if (cols >= 0 && width != cols) {
    throw ShapeError("matrix rows have " + std::to_string(width) + " entries, expected " +
                     std::to_string(cols));
  }
  Matrix m(rows, width);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != width) {
      throw ShapeError("ragged matrix at row " + std::to_string(i));
    }
    for (Index c = 0; c < width; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a list for a vector");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace lxdr
