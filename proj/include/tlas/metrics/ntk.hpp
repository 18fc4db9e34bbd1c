#pragma once

#include "tlas/autodiff/tape.hpp"
#include "tlas/network/deeponet.hpp"
#include "tlas/problems/pinn.hpp"

#include <functional>
#include <string>
#include <vector>

namespace tlas {

enum class NtkTarget { Residual, Solution };

NtkTarget parse_ntk_target(const std::string& name);

/// Batched outputs recorded on a tape (one row per output, one column).
using OutputClosure = std::function<ad::Var(ad::Tape&)>;

/// J_ij = d output_i / d theta_j, one reverse sweep per output.
Matrix output_jacobian(const OutputClosure& outputs, const Vector& theta);

/// A = J J^T restricted to the listed parameter columns (all when empty).
Matrix ntk_kernel(const Matrix& jacobian, const std::vector<Index>& columns = {});

struct Conditioning {
  double value = 0.0;  // sigma_max / sigma_min, infinite when rank deficient
  bool singular = false;
};

/// Singular values below 1e-14 sigma_max count as zero; any zero makes the
/// kernel singular.
Conditioning condition_number(const Matrix& kernel);

struct NtkReport {
  Index dimension = 0;
  double log10_condition = 0.0;
  bool singular = false;
  std::vector<double> layer_log10_condition;
  std::vector<char> layer_singular;
  Matrix kernel;
};

NtkReport ntk_report(const Matrix& jacobian, const ParamLayout& layout);

/// PINN kernel at `points` (at most 512 rows) of the residual or of u~.
NtkReport ntk_condition(const PinnProblem& problem, const NetworkSpec& spec, const Vector& theta,
                        const Matrix& points, NtkTarget target = NtkTarget::Residual);

/// DeepONet kernel of the predictions for sensor rows `y` on grid `xi`.
NtkReport ntk_condition(const DonSpec& spec, const Vector& theta, const Matrix& y, const Matrix& xi);

}  // namespace tlas
