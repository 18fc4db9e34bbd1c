#pragma once

#include "tlas/network/network.hpp"

#include <memory>
#include <optional>

namespace tlas {

/// Proper orthogonal decomposition of training targets on a fixed grid.
struct PodBasis {
  Vector mean;    // n_c
  Matrix basis;   // n_c x p, orthonormal columns
  Matrix points;  // n_c x d grid coordinates of the rows
  Index latent() const { return basis.cols(); }
};

/// DeepONet: G(y)(xi) = sum_k B_k(y) T_k(xi). The trunk is either a trained
/// network or a fixed POD basis; with a POD trunk the basis mean is added to
/// the prediction.
struct DonSpec {
  NetworkSpec branch;
  std::optional<NetworkSpec> trunk;
  std::shared_ptr<const PodBasis> pod;
  Index latent = 0;

  void validate() const;
  ParamLayout layout() const;
  bool has_pod_trunk() const { return pod != nullptr; }
};

/// Prediction for one input function at one coordinate.
double don_eval(const DonSpec& spec, const Vector& theta, std::span<const double> y, std::span<const double> xi);

/// Predictions for a batch of input functions on a shared grid: rows of `y`
/// are input functions, rows of `xi` coordinates. Returns n_s x n_c. With a
/// POD trunk, `xi` must be the basis grid.
Matrix don_predict(const DonSpec& spec, const Vector& theta, const Matrix& y, const Matrix& xi);

/// Same prediction recorded on a tape.
ad::Var don_predict_tape(ad::Tape& tape, const DonSpec& spec, const ParamLayout& layout, const Matrix& y,
                         const Matrix& xi);

}  // namespace tlas
