#pragma once

#include "tlas/autodiff/jet.hpp"
#include "tlas/autodiff/tape.hpp"

#include <functional>
#include <span>

namespace tlas {

/// Closure over jet-valued coordinates.
using JetField = std::function<ad::Jet2(std::span<const ad::Jet2> x)>;

/// Exact Dirichlet imposition u~ = G(x) + l(x) u(x): G extends the boundary
/// data into the domain and l vanishes on the boundary.
struct BoundaryWrapper {
  JetField extension;
  JetField length_factor;

  double extension_at(std::span<const double> x) const;
  double length_factor_at(std::span<const double> x) const;
};

double wrap_exact_bc(const BoundaryWrapper& wrapper, double u_raw, std::span<const double> x);

/// Jet version: derivatives of u~ are propagated for every coordinate `u_raw`
/// tracks, and no others.
ad::Jet2 wrap_exact_bc(const BoundaryWrapper& wrapper, const ad::Jet2& u_raw, std::span<const double> x);

/// G and l jets evaluated once on a batch of points (one row per point), laid
/// out in the channel order of `spec`.
struct BoundaryJets {
  ad::JetSpec spec;
  Matrix g_value, l_value;
  std::vector<Matrix> g_first, l_first;
  std::vector<Matrix> g_second, l_second;
};

BoundaryJets boundary_jets(const BoundaryWrapper& wrapper, const Matrix& points, const ad::JetSpec& spec);

/// Batched wrap on a tape; `u` must be a single-column jet with the same spec.
ad::JetVar wrap_exact_bc(ad::Tape& tape, const BoundaryJets& bc, const ad::JetVar& u);

}  // namespace tlas
