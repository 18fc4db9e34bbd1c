#include "tlas/problems/adv.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace tlas {

double adv_initial(const AdvParams& p, double x) {
  const double box = (x >= p.c1 - 0.5 * p.w && x <= p.c1 + 0.5 * p.w) ? p.h1 : 0.0;
  const double d = p.a * (x - p.c2);
  return box + std::sqrt(std::max(p.h2 * p.h2 - d * d, 0.0));
}

std::vector<AdvParams> sample_adv_params(Index count, std::uint64_t seed, const AdvRanges& r) {
  if (count < 0) throw Error("sample count must be non-negative");
  std::mt19937_64 rng(seed);
  auto draw = [&rng](const std::array<double, 2>& range) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return range[0] + (range[1] - range[0]) * u;
  };
  std::vector<AdvParams> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    AdvParams p{};
    p.a = draw(r.a);
    p.h1 = draw(r.h1);
    p.h2 = draw(r.h2);
    p.c1 = draw(r.c1);
    p.c2 = draw(r.c2);
    p.w = draw(r.w);
    out.push_back(p);
  }
  return out;
}

Vector adv_axis(Index n) {
  if (n < 2) throw Error("advection grid needs at least 2 points");
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = static_cast<double>(i) / static_cast<double>(n - 1);
  return x;
}

Matrix adv_solution(const AdvParams& p, Index n) {
  const Vector x = adv_axis(n);
  const Index period = n - 1;
  Vector base(period);
  for (Index i = 0; i < period; ++i) base(i) = adv_initial(p, x(i));
  Matrix u(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) u(j, i) = base(((i - j) % period + period) % period);
  }
  return u;
}

DonDataset gen_adv_dataset(Index count, std::uint64_t seed, Index n, const AdvRanges& ranges) {
  if (count < 1) throw Error("advection dataset needs at least one sample");
  const auto params = sample_adv_params(count, seed, ranges);
  const Vector axis = adv_axis(n);
  Matrix grid(n * n, 2);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      grid(j * n + i, 0) = axis(i);
      grid(j * n + i, 1) = axis(j);
    }
  }
  DonDataset data;
  data.y.resize(count, n);
  data.u.resize(count, n * n);
  data.xi.assign(static_cast<std::size_t>(count), grid);
  for (Index k = 0; k < count; ++k) {
    const Matrix u = adv_solution(params[static_cast<std::size_t>(k)], n);
    data.y.row(k) = u.row(0);
    data.u.row(k) = Eigen::Map<const Eigen::RowVectorXd>(u.data(), n * n);
  }
  std::ostringstream meta;
  meta << "adv seed=" << seed << " samples=" << count << " grid=" << n << "x" << n << " w~U[" << ranges.w[0]
       << "," << ranges.w[1] << "]";
  data.metadata = meta.str();
  return data;
}

}  // namespace tlas
