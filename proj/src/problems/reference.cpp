#include "tlas/problems/reference.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

namespace tlas {

namespace {

constexpr double pi = std::numbers::pi;

double grid_coord(double lo, double hi, Index i, Index n) {
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace

Matrix tensor_grid(const std::vector<double>& lower, const std::vector<double>& upper, Index n) {
  if (lower.size() != 2 || upper.size() != 2) throw Error("tensor grid needs a 2D box");
  if (n < 2) throw Error("grid needs at least 2 points per side");
  Matrix pts(n * n, 2);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      pts(i * n + j, 0) = grid_coord(lower[0], upper[0], i, n);
      pts(i * n + j, 1) = grid_coord(lower[1], upper[1], j, n);
    }
  }
  return pts;
}

double burgers_cole_hopf(double t, double x, double nu, double dz) {
  if (t <= 0.0) return -std::sin(pi * x);
  const double s = std::sqrt(4.0 * nu * t);
  const double k = 1.0 / (2.0 * pi * nu);
  const double half = 12.0;
  const auto m = static_cast<Index>(std::ceil(2.0 * half / dz));
  std::vector<double> e(static_cast<std::size_t>(m + 1)), y(static_cast<std::size_t>(m + 1));
  double emax = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i <= m; ++i) {
    const double z = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(m);
    const double arg = x - s * z;
    y[static_cast<std::size_t>(i)] = arg;
    e[static_cast<std::size_t>(i)] = -z * z - k * std::cos(pi * arg);
    emax = std::max(emax, e[static_cast<std::size_t>(i)]);
  }
  double num = 0.0, den = 0.0;
  for (Index i = 0; i <= m; ++i) {
    const double w = std::exp(e[static_cast<std::size_t>(i)] - emax) * ((i == 0 || i == m) ? 0.5 : 1.0);
    num += w * std::sin(pi * y[static_cast<std::size_t>(i)]);
    den += w;
  }
  return -num / den;
}

ReferenceSolution burgers_reference(const PinnConstants& c, Index n) {
  ReferenceSolution ref;
  ref.n = n;
  ref.points = tensor_grid({0.0, -1.0}, {1.0, 1.0}, n);
  ref.values.resize(ref.points.rows());
  for (Index k = 0; k < ref.points.rows(); ++k) {
    ref.values(k) = burgers_cole_hopf(ref.points(k, 0), ref.points(k, 1), c.nu);
  }
  return ref;
}

ReferenceSolution da_reference(const PinnConstants& c, Index n, Index refine) {
  if (refine < 1) throw Error("refinement factor must be positive");
  const Index cells = (n - 1) * refine;
  const Index m = cells - 1;  // interior unknowns per side
  const double h = 1.0 / static_cast<double>(cells);
  const double diag = 4.0 * c.mu / (h * h);
  const double off = c.mu / (h * h);
  const double adv0 = c.b[0] / (2.0 * h), adv1 = c.b[1] / (2.0 * h);
  auto id = [m](Index i, Index j) { return i * m + j; };

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(5 * m * m));
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      const Index r = id(i, j);
      trip.emplace_back(r, r, diag);
      if (i > 0) trip.emplace_back(r, id(i - 1, j), -off - adv0);
      if (i + 1 < m) trip.emplace_back(r, id(i + 1, j), -off + adv0);
      if (j > 0) trip.emplace_back(r, id(i, j - 1), -off - adv1);
      if (j + 1 < m) trip.emplace_back(r, id(i, j + 1), -off + adv1);
    }
  }
  Eigen::SparseMatrix<double> A(m * m, m * m);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw Error("diffusion-advection reference: factorization failed");
  const Vector u = lu.solve(Vector::Constant(m * m, c.f));

  ReferenceSolution ref;
  ref.n = n;
  ref.points = tensor_grid({0.0, 0.0}, {1.0, 1.0}, n);
  ref.values = Vector::Zero(n * n);
  for (Index i = 1; i + 1 < n; ++i) {
    for (Index j = 1; j + 1 < n; ++j) ref.values(i * n + j) = u(id(i * refine - 1, j * refine - 1));
  }
  return ref;
}

ReferenceSolution ac_reference(const PinnConstants& c, Index n, Index refine) {
  if (refine < 1) throw Error("refinement factor must be positive");
  const Index cells = (n - 1) * refine;
  const double h = 2.0 / static_cast<double>(cells);
  const Index substeps = refine;
  const double dt = 1.0 / static_cast<double>((n - 1) * substeps);
  const double k = c.diffusion / (h * h);

  Vector u(cells + 1);
  for (Index i = 0; i <= cells; ++i) {
    const double x = -1.0 + h * static_cast<double>(i);
    u(i) = x * x * std::cos(pi * x);
  }
  u(0) = u(cells) = -1.0;
  auto rhs = [&](const Vector& v) {
    Vector out = Vector::Zero(v.size());
    for (Index i = 1; i < cells; ++i) {
      out(i) = k * (v(i - 1) - 2.0 * v(i) + v(i + 1)) + 5.0 * (v(i) - v(i) * v(i) * v(i));
    }
    return out;
  };

  ReferenceSolution ref;
  ref.n = n;
  ref.points = tensor_grid({0.0, -1.0}, {1.0, 1.0}, n);
  ref.values.resize(n * n);
  auto record = [&](Index ti) {
    for (Index j = 0; j < n; ++j) ref.values(ti * n + j) = u(j * refine);
  };
  record(0);
  for (Index ti = 1; ti < n; ++ti) {
    for (Index s = 0; s < substeps; ++s) {
      const Vector k1 = rhs(u);
      const Vector k2 = rhs(u + 0.5 * dt * k1);
      const Vector k3 = rhs(u + 0.5 * dt * k2);
      const Vector k4 = rhs(u + dt * k3);
      u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    record(ti);
  }
  return ref;
}

const ReferenceSolution& pinn_reference(const PinnProblem& problem, Index n) {
  using Key = std::tuple<int, Index, double, double, double, double, double, double>;
  static std::mutex mu;
  static std::map<Key, std::unique_ptr<ReferenceSolution>> cache;
  const PinnConstants& c = problem.constants;
  const Key key{static_cast<int>(problem.kind), n, c.nu, c.mu, c.b[0], c.b[1], c.f, c.diffusion};
  std::lock_guard lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;
  ReferenceSolution ref;
  switch (problem.kind) {
    case PinnKind::Burgers: ref = burgers_reference(c, n); break;
    case PinnKind::DiffusionAdvection: ref = da_reference(c, n); break;
    case PinnKind::AllenCahn: ref = ac_reference(c, n); break;
  }
  const auto pos = cache.emplace(key, std::make_unique<ReferenceSolution>(std::move(ref))).first;
  return *pos->second;
}

double relative_l2_error(const Vector& pred, const Vector& ref) {
  if (pred.size() != ref.size()) throw Error("prediction and reference grids differ");
  const double den = pred.norm();
  if (den == 0.0) throw Error("relative error undefined: prediction norm is zero");
  return (pred - ref).norm() / den;
}

}  // namespace tlas
