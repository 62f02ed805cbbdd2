#pragma once

#include "lxdr/types.hpp"

#include <json.hpp>

namespace lxdr {

using Json = nlohmann::json;

/// Row-major nested list.
Json matrix_to_json(const Matrix& m);
Json vector_to_json(const Vector& v);

/// Inverse of matrix_to_json; `cols` fixes the width when the list is empty.
Matrix matrix_from_json(const Json& j, Index cols = -1);
Vector vector_from_json(const Json& j);

}  // namespace lxdr
