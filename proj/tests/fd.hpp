#pragma once

#include "tlas/autodiff/dense.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace tlas::testing {

inline Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& theta,
                                 double h = 1e-5) {
  Vector g(theta.size());
  Vector probe = theta;
  for (Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double up = f(probe);
    probe[i] = theta[i] - h;
    const double down = f(probe);
    probe[i] = theta[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Largest entrywise error relative to the gradient scale.
inline double gradient_mismatch(const Vector& g, const Vector& reference) {
  const double scale = std::max(reference.lpNorm<Eigen::Infinity>(), 1e-300);
  return (g - reference).lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace tlas::testing
