#include "doctest.h"

#include "quadratic.hpp"
#include "tlas/optimizer/lbfgs.hpp"

#include <cmath>
#include <random>

using namespace tlas;
using tlas::testing::quadratic;
using tlas::testing::random_spd;

namespace {

bool strong_wolfe(const StepRecord& s, const WolfeConfig& w) {
  return s.phi <= s.phi0 + w.c1 * s.alpha * s.dphi0 && std::abs(s.dphi) <= w.c2 * std::abs(s.dphi0);
}

}  // namespace

TEST_CASE("direction with empty memory is the negative gradient") {
  LbfgsState st(3, 1e-12);
  Vector g(2);
  g << 3.0, -4.0;
  const Vector p = lbfgs_direction(st, g);
  CHECK(p[0] == -3.0);
  CHECK(p[1] == 4.0);
}

TEST_CASE("one secant pair of an isotropic quadratic recovers the inverse Hessian") {
  LbfgsState st(3, 1e-12);
  Vector s(2);
  s << 1.0, 0.5;
  REQUIRE(st.push(s, 2.0 * s));
  Vector g(2);
  g << 0.7, -1.3;
  const Vector p = lbfgs_direction(st, g);
  CHECK((p + 0.5 * g).norm() < 1e-15);
}

TEST_CASE("two-loop recursion equals the explicit inverse BFGS update") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  const Index n = 6;
  const Matrix A = random_spd(n, rng, 1.0, 10.0);
  LbfgsState st(3, 1e-12);
  std::vector<Vector> S, Y;
  for (int k = 0; k < 5; ++k) {
    Vector s(n);
    for (Index i = 0; i < n; ++i) s[i] = normal(rng);
    Vector y = A * s;
    st.push(s, y);
    S.push_back(s);
    Y.push_back(y);
  }
  // textbook: H0 = gamma I from the newest pair, then BFGS updates over the last m pairs
  const std::size_t first = S.size() - 3;
  const double gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
  Matrix H = gamma * Matrix::Identity(n, n);
  for (std::size_t i = first; i < S.size(); ++i) {
    const double rho = 1.0 / Y[i].dot(S[i]);
    const Matrix V = Matrix::Identity(n, n) - rho * Y[i] * S[i].transpose();
    H = V.transpose() * H * V + rho * S[i] * S[i].transpose();
  }
  Vector g(n);
  for (Index i = 0; i < n; ++i) g[i] = normal(rng);
  const Vector p = lbfgs_direction(st, g);
  CHECK((p + H * g).norm() < 1e-12 * (H * g).norm());
}

TEST_CASE("curvature guard rejects non-positive pairs") {
  LbfgsState st(3, 1e-12);
  Vector s(2), y(2);
  s << 1.0, 0.0;
  y << -1.0, 0.0;
  CHECK_FALSE(st.push(s, y));
  y << 0.0, 1.0;
  CHECK_FALSE(st.push(s, y));
  CHECK(st.empty());
}

TEST_CASE("line search accepts the exact minimizer of a parabola") {
  auto phi = [](double a) { return LineSample{(a - 1) * (a - 1), 2 * (a - 1)}; };
  const auto r = wolfe_linesearch(phi, 1.0, -2.0, WolfeConfig{});
  CHECK(r.alpha == 1.0);
  CHECK(r.status == StepStatus::Wolfe);
}

TEST_CASE("linear phi with a single evaluation accepts the initial step") {
  auto phi = [](double a) { return LineSample{1.0 - a, -1.0}; };
  WolfeConfig cfg;
  cfg.max_evals = 1;
  const auto r = wolfe_linesearch(phi, 1.0, -1.0, cfg);
  CHECK(r.alpha == 1.0);
  CHECK(r.status == StepStatus::Degraded);
}

TEST_CASE("line search on a non-convex profile satisfies both Wolfe inequalities") {
  // phi(a) = cos(a + a0) + (a + a0)^2 / 4 started at a0 = 0.3 where phi'(0) < 0
  const double a0 = 0.3;
  auto f = [&](double a) { return std::cos(a + a0) + (a + a0) * (a + a0) / 4.0; };
  auto df = [&](double a) { return -std::sin(a + a0) + (a + a0) / 2.0; };
  auto phi = [&](double a) { return LineSample{f(a), df(a)}; };
  for (double c2 : {0.9, 0.5, 0.1}) {
    WolfeConfig cfg;
    cfg.c2 = c2;
    for (double init : {0.01, 1.0, 5.0, 40.0}) {
      cfg.initial_step = init;
      const auto r = wolfe_linesearch(phi, f(0), df(0), cfg);
      REQUIRE(r.status == StepStatus::Wolfe);
      CHECK(f(r.alpha) <= f(0) + cfg.c1 * r.alpha * df(0));
      CHECK(std::abs(df(r.alpha)) <= c2 * std::abs(df(0)));
      // grid oracle: the accepted point lies in the Wolfe set found by scanning
      bool grid_hit = false;
      for (int k = 1; k <= 200000 && !grid_hit; ++k) {
        const double a = 1e-4 * k;
        grid_hit = std::abs(a - r.alpha) < 1e-4 && f(a) <= f(0) + cfg.c1 * a * df(0);
      }
      CHECK(grid_hit);
    }
  }
}

TEST_CASE("ascent direction is rejected") {
  auto phi = [](double a) { return LineSample{a, 1.0}; };
  CHECK_THROWS_WITH_AS(wolfe_linesearch(phi, 0.0, 1.0, WolfeConfig{}), "not a descent direction", Error);
  CHECK_THROWS_AS(wolfe_linesearch(phi, 0.0, 0.0, WolfeConfig{}), Error);
}

TEST_CASE("no sufficient decrease within the budget fails") {
  auto phi = [](double a) { return LineSample{a * a * 1e6 - 1e-9 * a, 2e6 * a - 1e-9}; };
  WolfeConfig cfg;
  cfg.max_evals = 3;
  const auto r = wolfe_linesearch(phi, 0.0, -1e-9, cfg);
  CHECK(r.status == StepStatus::Failed);
  CHECK(r.alpha == 0.0);
}

TEST_CASE("zero iterations returns the start and charges one gradient") {
  Matrix A = Matrix::Identity(3, 3);
  Vector b = Vector::Ones(3);
  const auto obj = quadratic(A, b);
  CostLedger ledger(3);
  LbfgsOptions opt;
  opt.max_iters = 0;
  Vector x0 = Vector::Constant(3, 0.2);
  const auto r = lbfgs_run(obj, x0, LbfgsConfig{}, opt, &ledger);
  CHECK((r.theta.array() == x0.array()).all());
  CHECK(ledger.gradient_evaluations() == 1.0);
  CHECK(ledger.update_cost() == 0);
}

TEST_CASE("diag(1,10) quadratic converges within 20 iterations") {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = 10.0;
  Vector b(2);
  b << 1.0, -2.0;
  const auto obj = quadratic(A, b);
  LbfgsConfig cfg;
  cfg.momentum = 0.0;
  LbfgsOptions opt;
  opt.max_iters = 20;
  opt.tolerance = 1e-10;
  Vector x0(2);
  x0 << 3.0, 1.0;
  const auto r = lbfgs_run(obj, x0, cfg, opt);
  CHECK(r.converged);
  CHECK(r.grad.norm() < 1e-10);
}

TEST_CASE("convex quadratics reach the closed-form minimizer with strong Wolfe steps") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  for (Index n : {2, 5, 10, 25}) {
    const Matrix A = random_spd(n, rng, 1.0, 10.0);
    Vector b(n);
    for (Index i = 0; i < n; ++i) b[i] = normal(rng);
    const Vector xstar = A.llt().solve(b);
    const auto obj = quadratic(A, b);
    LbfgsOptions opt;
    opt.max_iters = 3 * n;
    opt.tolerance = 1e-12;
    opt.record_steps = true;
    LbfgsConfig cfg;
    cfg.momentum = 0.0;
    const auto r = lbfgs_run(obj, Vector::Zero(n), cfg, opt);
    CHECK((r.theta - xstar).norm() < 1e-8);
    for (const auto& s : r.steps) {
      CHECK(s.status == StepStatus::Wolfe);
      CHECK(strong_wolfe(s, LbfgsConfig{}.wolfe));
      CHECK(s.phi <= s.phi0);
    }
  }
}

TEST_CASE("momentum runs also reach the minimizer") {
  std::mt19937_64 rng(23);
  const Matrix A = random_spd(12, rng, 1.0, 10.0);
  const Vector b = Vector::LinSpaced(12, -1.0, 1.0);
  const auto obj = quadratic(A, b);
  LbfgsOptions opt;
  opt.max_iters = 200;
  opt.tolerance = 1e-12;
  const auto r = lbfgs_run(obj, Vector::Zero(12), LbfgsConfig{}, opt);
  CHECK((r.theta - A.llt().solve(b)).norm() < 1e-8);
}

TEST_CASE("restricted run leaves frozen coordinates bit-identical") {
  std::mt19937_64 rng(3);
  const Matrix A = random_spd(6, rng, 1.0, 5.0);
  const Vector b = Vector::LinSpaced(6, -1.0, 1.0);
  const auto obj = quadratic(A, b);
  Vector x0 = Vector::LinSpaced(6, 0.3, 2.9);
  LbfgsOptions opt;
  opt.max_iters = 30;
  opt.map = IndexMap{{1, 2, 4}};
  CostLedger ledger(6);
  const auto r = lbfgs_run(obj, x0, LbfgsConfig{}, opt, &ledger);
  for (Index i : {0, 3, 5}) CHECK(r.theta[i] == x0[i]);
  CHECK(r.loss < obj.value(x0));
  CHECK(r.grad[0] == 0.0);
  // three active parameters per gradient
  CHECK(ledger.gradient_units() == 3 * (1 + r.iterations));
  CHECK(ledger.update_cost() == 3 * (1 + 4 * 3) * r.iterations);
}

TEST_CASE("memory zero without momentum is gradient descent with Wolfe steps") {
  Matrix A(2, 2);
  A << 3.0, 1.0, 1.0, 2.0;
  Vector b(2);
  b << 1.0, 1.0;
  const auto obj = quadratic(A, b);
  LbfgsConfig cfg;
  cfg.memory = 0;
  cfg.momentum = 0.0;
  LbfgsOptions opt;
  opt.max_iters = 8;
  Vector x0(2);
  x0 << 2.0, -1.0;
  const auto r = lbfgs_run(obj, x0, cfg, opt);

  Vector x = x0;
  for (int k = 0; k < 8; ++k) {
    const Vector g = A * x - b;
    const Vector p = -g;
    WolfeConfig w;
    w.initial_step = std::min(1.0, 1.0 / g.lpNorm<1>());
    auto phi = [&](double a) {
      const Vector xa = x + a * p;
      return LineSample{obj.value(xa), (A * xa - b).dot(p)};
    };
    const auto ls = wolfe_linesearch(phi, obj.value(x), g.dot(p), w);
    x = x + ls.alpha * p;
  }
  CHECK((r.theta.array() == x.array()).all());
}

TEST_CASE("runs are deterministic and monotone") {
  std::mt19937_64 rng(8);
  const Matrix A = random_spd(8, rng, 0.1, 50.0);
  const Vector b = Vector::Ones(8);
  // add a quartic term so the problem is not quadratic
  FunctionObjective obj(
      8, [&](const Vector& x) { return 0.5 * x.dot(A * x) - b.dot(x) + 0.1 * x.array().pow(4).sum(); },
      [&](const Vector& x) { return Vector(A * x - b + 0.4 * x.array().pow(3).matrix()); });
  LbfgsOptions opt;
  opt.max_iters = 40;
  opt.record_steps = true;
  const Vector x0 = Vector::LinSpaced(8, -2.0, 2.0);
  const auto r1 = lbfgs_run(obj, x0, LbfgsConfig{}, opt);
  const auto r2 = lbfgs_run(obj, x0, LbfgsConfig{}, opt);
  CHECK((r1.theta.array() == r2.theta.array()).all());
  for (const auto& s : r1.steps) CHECK(s.phi <= s.phi0);
}

TEST_CASE("persistent state continues across calls") {
  std::mt19937_64 rng(2);
  const Matrix A = random_spd(5, rng, 1.0, 30.0);
  const Vector b = Vector::Ones(5);
  const auto obj = quadratic(A, b);
  LbfgsConfig cfg;
  LbfgsOptions opt;
  opt.max_iters = 12;
  const auto whole = lbfgs_run(obj, Vector::Zero(5), cfg, opt);

  LbfgsState st(cfg.memory, cfg.curvature_guard);
  opt.max_iters = 1;
  Vector x = Vector::Zero(5);
  Evaluation e = obj.evaluate(x);
  for (int k = 0; k < 12; ++k) {
    const auto r = lbfgs_run(obj, x, cfg, opt, nullptr, &e, &st);
    x = r.theta;
    e = Evaluation{r.loss, r.grad};
  }
  CHECK((x.array() == whole.theta.array()).all());
}
