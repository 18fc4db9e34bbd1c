#pragma once

#include "tlas/problems/adv.hpp"

#include <cmath>

namespace tlas::testing {

// First-order upwind for u_t + u_x = 0 with periodic wrap on a grid refined
// `refine` times, Courant number 1. Returns the n x n coarse samples.
inline Matrix adv_upwind(const AdvParams& p, Index n, Index refine) {
  const Index period = (n - 1) * refine;
  const double dx = 1.0 / static_cast<double>(period);
  const double courant = 1.0;
  Vector u(period);
  for (Index i = 0; i < period; ++i) u(i) = adv_initial(p, dx * static_cast<double>(i));
  Matrix out(n, n);
  auto record = [&](Index j) {
    for (Index i = 0; i < n; ++i) out(j, i) = u((i * refine) % period);
  };
  record(0);
  Vector next(period);
  for (Index j = 1; j < n; ++j) {
    for (Index s = 0; s < refine; ++s) {
      for (Index i = 0; i < period; ++i) {
        const double left = u((i + period - 1) % period);
        next(i) = u(i) - courant * (u(i) - left);
      }
      u.swap(next);
    }
    record(j);
  }
  return out;
}

inline double rms(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

}  // namespace tlas::testing
