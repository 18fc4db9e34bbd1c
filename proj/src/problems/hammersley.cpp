#include "tlas/problems/hammersley.hpp"

namespace tlas {

double radical_inverse(std::uint64_t i, unsigned base) {
  const double inv = 1.0 / static_cast<double>(base);
  double f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

Matrix hammersley(Index count, Index dim, const std::vector<double>& lower, const std::vector<double>& upper) {
  if (dim < 1 || dim > 3) throw Error("Hammersley points are available in 1 to 3 dimensions");
  if (count < 1) throw Error("Hammersley set needs at least one point");
  if ((!lower.empty() && static_cast<Index>(lower.size()) != dim) ||
      (!upper.empty() && static_cast<Index>(upper.size()) != dim)) {
    throw Error("box bounds do not match the dimension");
  }
  static constexpr unsigned bases[2] = {2, 3};
  Matrix pts(count, dim);
  for (Index i = 0; i < count; ++i) {
    pts(i, 0) = static_cast<double>(i) / static_cast<double>(count);
    for (Index d = 1; d < dim; ++d) pts(i, d) = radical_inverse(static_cast<std::uint64_t>(i), bases[d - 1]);
  }
  for (Index d = 0; d < dim; ++d) {
    const double lo = lower.empty() ? 0.0 : lower[static_cast<std::size_t>(d)];
    const double hi = upper.empty() ? 1.0 : upper[static_cast<std::size_t>(d)];
    pts.col(d) = (lo + (hi - lo) * pts.col(d).array()).matrix();
  }
  return pts;
}

Matrix hammersley_interior(Index count, Index dim, const std::vector<double>& lower,
                           const std::vector<double>& upper) {
  const Matrix all = hammersley(count + 1, dim, lower, upper);
  return all.bottomRows(count);
}

}  // namespace tlas
