#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lxdr {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;

// Instances x features. Every backend, explainer and metric consumes this.
using DataMatrix = Matrix;

using Seed = std::uint64_t;

/// Raised when operand shapes disagree (wrong feature count, wrong reduced dims, ...).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot produce a result for the given input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string shape_str(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
  if (!all_finite(m)) {
    throw std::invalid_argument(std::string(what) + " contains non-finite values");
  }
}

inline void require_length(Index actual, Index expected, const char* what) {
  if (actual != expected) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(expected) +
                     " entries, got " + std::to_string(actual));
  }
}

}  // namespace lxdr
