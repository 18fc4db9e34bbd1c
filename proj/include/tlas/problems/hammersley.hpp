#pragma once

#include "tlas/autodiff/dense.hpp"

#include <vector>

namespace tlas {

/// Base-b radical inverse of i.
double radical_inverse(std::uint64_t i, unsigned base);

/// Point i = (i/count, Phi_2(i), Phi_3(i)) for i = 0..count-1, mapped to the
/// box [lower, upper]. One row per point; dim in {1, 2, 3}.
Matrix hammersley(Index count, Index dim, const std::vector<double>& lower = {},
                  const std::vector<double>& upper = {});

/// `count` strictly interior points: the first Hammersley point of a
/// (count + 1)-point set sits on the box corner and is dropped.
Matrix hammersley_interior(Index count, Index dim, const std::vector<double>& lower,
                           const std::vector<double>& upper);

}  // namespace tlas
