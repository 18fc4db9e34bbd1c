#pragma once

#include "tlas/network/deeponet.hpp"
#include "tlas/optimizer/objective.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tlas {

/// Operator-learning samples {(y_j, xi_j, u_j)}: y is n_s x m sensor values,
/// xi[j] the n_c x d coordinates of sample j, u is n_s x n_c targets.
struct DonDataset {
  Matrix y;
  std::vector<Matrix> xi;
  Matrix u;
  std::string metadata;

  Index samples() const { return y.rows(); }
  Index sensors() const { return y.cols(); }
  Index points() const { return u.cols(); }
  Index dim() const { return xi.empty() ? 0 : xi.front().cols(); }

  void validate() const;
  /// True when every sample uses the same coordinates.
  bool shared_grid() const;
  DonDataset slice(Index begin, Index count) const;
};

/// Little-endian "DOND" binary file.
void write_dond(const std::string& path, const DonDataset& data);
DonDataset read_dond(const std::string& path);
inline constexpr std::uint32_t kDondVersion = 1;

/// Centered-snapshot POD: mean row and the p leading left singular vectors
/// of the (n_c x n_s) centered snapshot matrix. Column signs are fixed so the
/// largest-magnitude entry is positive.
PodBasis pod_basis(const Matrix& targets, Index p, const Matrix& points);

/// Mean squared prediction error over all samples and points.
class DonObjective : public Objective {
 public:
  DonObjective(const DonDataset& data, const DonSpec& spec);

  Index size() const override { return layout_.size(); }
  double value(const Vector& theta) const override;
  Evaluation evaluate(const Vector& theta, const std::vector<char>* active = nullptr) const override;

  const DonSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }
  Matrix predict(const Vector& theta) const;

 private:
  ad::Var loss(ad::Tape& tape) const;

  DonSpec spec_;
  ParamLayout layout_;
  Matrix y_, grid_, u_;
};

double don_loss(const DonDataset& data, const DonSpec& spec, const Vector& theta);

}  // namespace tlas
