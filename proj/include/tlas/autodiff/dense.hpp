#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tlas {

/// Row-major dense matrix of doubles; the storage type for every tape value.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a tape primitive produces a NaN or infinity.
class NonFiniteError : public Error {
 public:
  NonFiniteError(Index primitive, const std::string& op)
      : Error("non-finite value produced by primitive #" + std::to_string(primitive) + " (" + op + ")"),
        primitive_(primitive) {}

  Index primitive() const noexcept { return primitive_; }

 private:
  Index primitive_;
};

}  // namespace tlas
