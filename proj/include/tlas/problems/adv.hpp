#pragma once

#include "tlas/problems/dataset.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace tlas {

/// Initial profile u0(x) = h1 1[c1 - w/2, c1 + w/2](x) + sqrt(max(h2^2 - a^2 (x - c2)^2, 0)).
struct AdvParams {
  double a, h1, h2, c1, c2, w;
};

struct AdvRanges {
  std::array<double, 2> a{0.1, 0.2};
  std::array<double, 2> h1{0.5, 2.0};
  std::array<double, 2> h2{0.5, 2.0};
  std::array<double, 2> c1{0.2, 0.3};
  std::array<double, 2> c2{0.7, 0.8};
  std::array<double, 2> w{0.1, 0.2};
};

double adv_initial(const AdvParams& p, double x);

/// Independent uniform draws per parameter; deterministic per seed.
std::vector<AdvParams> sample_adv_params(Index count, std::uint64_t seed, const AdvRanges& ranges = {});

/// Uniform grid of `n` points on [0, 1] (both ends included).
Vector adv_axis(Index n);

/// Exact solution u0((x - t) mod 1) on the n x n grid, row j = time t_j,
/// column i = space x_i. With t_j = j/(n-1) and x_i = i/(n-1) this is the
/// circular shift of the t = 0 row by j cells.
Matrix adv_solution(const AdvParams& p, Index n);

/// Dataset of `count` samples: sensors are the t = 0 row, targets the
/// flattened solution (point k = j n + i), coordinates (x_i, t_j).
DonDataset gen_adv_dataset(Index count, std::uint64_t seed, Index n = 40, const AdvRanges& ranges = {});

}  // namespace tlas
