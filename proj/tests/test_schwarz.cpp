#include "doctest.h"

#include "quadratic.hpp"
#include "tlas/problems/pinn.hpp"
#include "tlas/schwarz/schwarz.hpp"

#include <cmath>

using namespace tlas;
using tlas::testing::layer_quadratic;
using tlas::testing::quadratic;

namespace {

SchwarzConfig exact_config(Index subdomains) {
  SchwarzConfig cfg;
  cfg.subdomains = subdomains;
  cfg.overlap = 0;
  cfg.local_iters = 500;
  cfg.local_tolerance = 1e-13;
  cfg.coarse_tolerance = 1e-13;
  cfg.local.momentum = 0.0;
  cfg.coarse.momentum = 0.0;
  cfg.threads = 1;
  return cfg;
}

struct SmallPinn {
  PinnProblem problem = make_pinn_problem(PinnKind::Burgers, 64);
  NetworkSpec spec = NetworkSpec::mlp({2, 6, 6, 6, 6, 6, 1}, Activation::Tanh, true, true);
};

}  // namespace

TEST_CASE("sync strategy names") {
  CHECK(parse_sync("sequential") == SyncStrategy::Sequential);
  CHECK(parse_sync("single-damped") == SyncStrategy::SingleDamped);
  CHECK(parse_sync("overlap-average") == SyncStrategy::OverlapAverage);
  CHECK(to_string(SyncStrategy::OverlapAverage) == "overlap-average");
  CHECK_THROWS_AS(parse_sync("random"), Error);
  SchwarzConfig bad;
  bad.subdomains = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("separable quadratic: local solves plus sequential sync reach the minimizer") {
  const ParamLayout layout(NetworkSpec::mlp({2, 3, 3, 3, 1}));
  const auto q = layer_quadratic(layout, 5);
  const auto obj = quadratic(q.A, q.b);
  const Decomposition dec = decompose(layout, 4, 0);
  const SchwarzConfig cfg = exact_config(4);
  const Vector theta = Vector::Zero(layout.size());
  const LocalResult local = local_solve_all(obj, theta, dec, cfg, nullptr);

  Vector sum = theta;
  for (const Vector& d : local.directions) sum += d;
  CHECK((sum - q.minimizer).lpNorm<Eigen::Infinity>() < 1e-10);

  const SyncResult sync =
      synchronize(obj, theta, obj.value(theta), local.directions, dec, SyncStrategy::Sequential, cfg, nullptr);
  for (double g : sync.gammas) CHECK(g == 1.0);
  CHECK((sync.theta - q.minimizer).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("directions are supported on their subdomains") {
  const SmallPinn p;
  const PinnObjective obj(p.problem, p.spec);
  const Vector theta = init_xavier(ParamLayout(p.spec), 3);
  SchwarzConfig cfg;
  cfg.subdomains = 2;
  cfg.overlap = 1;
  cfg.local_iters = 3;
  cfg.threads = 1;
  const Decomposition dec = decompose(p.spec, 2, 1);
  const LocalResult local = local_solve_all(obj, theta, dec, cfg, nullptr);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto mask = dec.maps[s].mask(obj.size());
    for (Index i = 0; i < obj.size(); ++i) {
      if (!mask[static_cast<std::size_t>(i)]) CHECK(local.directions[s](i) == 0.0);
    }
    CHECK_FALSE(local.directions[s].isZero(0.0));
  }
  std::vector<Vector> leaking = local.directions;
  leaking[0] += leaking[1];
  CHECK_THROWS_AS(synchronize(obj, theta, obj.value(theta), leaking, dec, SyncStrategy::Sequential, cfg, nullptr),
                  Error);
}

TEST_CASE("snapshot isolation: solve order and worker count leave directions unchanged") {
  const SmallPinn p;
  const PinnObjective obj(p.problem, p.spec);
  const Vector theta = init_xavier(ParamLayout(p.spec), 4);
  SchwarzConfig cfg;
  cfg.subdomains = 3;
  cfg.overlap = 1;
  cfg.local_iters = 4;
  cfg.threads = 1;
  const Decomposition dec = decompose(p.spec, 3, 1);
  CostLedger a_ledger(obj.size()), b_ledger(obj.size());
  const LocalResult a = local_solve_all(obj, theta, dec, cfg, &a_ledger);
  const std::vector<Index> order{2, 0, 1};
  const LocalResult b = local_solve_all(obj, theta, dec, cfg, &b_ledger, &order);
  cfg.threads = 3;
  const LocalResult c = local_solve_all(obj, theta, dec, cfg, nullptr);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK((a.directions[s].array() == b.directions[s].array()).all());
    CHECK((a.directions[s].array() == c.directions[s].array()).all());
  }
  CHECK(a_ledger.gradient_units() == b_ledger.gradient_units());
  const std::vector<Index> bad{0, 0, 1};
  CHECK_THROWS_AS(local_solve_all(obj, theta, dec, cfg, nullptr, &bad), Error);
}

TEST_CASE("local solve degenerates to a full LBFGS run") {
  const SmallPinn p;
  const PinnObjective obj(p.problem, p.spec);
  const Vector theta = init_xavier(ParamLayout(p.spec), 5);
  SchwarzConfig cfg;
  cfg.subdomains = 1;
  cfg.local_iters = 5;
  cfg.threads = 1;
  const Decomposition dec = decompose(p.spec, 1, 0);
  const LocalResult local = local_solve_all(obj, theta, dec, cfg, nullptr);
  LbfgsOptions opt;
  opt.max_iters = 5;
  const LbfgsResult r = lbfgs_run(obj, theta, cfg.local, opt);
  CHECK(((r.theta - theta).array() == local.directions[0].array()).all());
}

TEST_CASE("synchronization edge cases") {
  const SmallPinn p;
  const PinnObjective obj(p.problem, p.spec);
  const Vector theta = init_xavier(ParamLayout(p.spec), 6);
  const double loss = obj.value(theta);
  SchwarzConfig cfg;
  cfg.threads = 1;
  const Decomposition dec3 = decompose(p.spec, 3, 1);
  const std::vector<Vector> zeros(3, Vector::Zero(obj.size()));
  for (auto s : {SyncStrategy::Sequential, SyncStrategy::SingleDamped, SyncStrategy::OverlapAverage}) {
    const SyncResult r = synchronize(obj, theta, loss, zeros, dec3, s, cfg, nullptr);
    CHECK((r.theta.array() == theta.array()).all());
    CHECK(r.loss == loss);
    CHECK(r.evaluations == 0);
  }

  // one subdomain: sequential and single damping coincide
  const Decomposition dec1 = decompose(p.spec, 1, 0);
  cfg.subdomains = 1;
  cfg.local_iters = 3;
  const LocalResult local = local_solve_all(obj, theta, dec1, cfg, nullptr);
  const SyncResult seq = synchronize(obj, theta, loss, local.directions, dec1, SyncStrategy::Sequential, cfg, nullptr);
  const SyncResult one =
      synchronize(obj, theta, loss, local.directions, dec1, SyncStrategy::SingleDamped, cfg, nullptr);
  CHECK((seq.theta.array() == one.theta.array()).all());
  CHECK(seq.loss == one.loss);
  CHECK(seq.loss < loss);

  // an ascent direction is rejected with gamma = 0
  const Evaluation e = obj.evaluate(theta);
  std::vector<Vector> up{e.grad};
  const SyncResult rej = synchronize(obj, theta, loss, up, dec1, SyncStrategy::Sequential, cfg, nullptr);
  CHECK(rej.gammas[0] == 0.0);
  CHECK((rej.theta.array() == theta.array()).all());
}

TEST_CASE("overlap averaging divides by multiplicity") {
  const ParamLayout layout(NetworkSpec::mlp({1, 2, 2, 2, 1}));
  const Decomposition dec = decompose(layout, 2, 1);
  const Index n = layout.size();
  // f = 1/2 |theta - 1|^2, directions that each jump to 1 on their subdomain
  const auto obj = quadratic(Matrix::Identity(n, n), Vector::Ones(n));
  std::vector<Vector> d;
  for (const auto& m : dec.maps) d.push_back(prolong_add(Vector::Ones(m.size()), m, n));
  SchwarzConfig cfg;
  const Vector zero = Vector::Zero(n);
  const SyncResult avg = synchronize(obj, zero, obj.value(zero), d, dec, SyncStrategy::OverlapAverage, cfg, nullptr);
  CHECK(avg.gammas.size() == 1);
  CHECK(avg.gammas[0] == 1.0);
  CHECK((avg.theta - Vector::Ones(n)).isZero(0.0));
  const SyncResult sum = synchronize(obj, zero, obj.value(zero), d, dec, SyncStrategy::SingleDamped, cfg, nullptr);
  CHECK(sum.loss > avg.loss);
}

TEST_CASE("coarse step") {
  const ParamLayout layout(NetworkSpec::mlp({2, 3, 3, 3, 1}));
  const auto q = layer_quadratic(layout, 8);
  const auto obj = quadratic(q.A, q.b);
  const Decomposition dec = decompose(layout, 2, 0);
  SchwarzConfig cfg = exact_config(2);
  const Vector theta = Vector::Constant(layout.size(), 0.3);
  const double loss = obj.value(theta);

  cfg.coarse_iters = 0;
  const CoarseResult none = coarse_step(obj, theta, loss, dec, cfg, nullptr);
  CHECK((none.theta.array() == theta.array()).all());

  cfg.coarse_iters = 200;
  CostLedger ledger(layout.size());
  const CoarseResult r = coarse_step(obj, theta, loss, dec, cfg, &ledger);
  CHECK(r.loss <= loss);
  const auto mask = dec.coarse.mask(layout.size());
  for (Index i = 0; i < layout.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) {
      // layer blocks are independent, so the coarse block minimizer is the global one
      CHECK(r.theta(i) == doctest::Approx(q.minimizer(i)).epsilon(1e-9));
    } else {
      CHECK(r.theta(i) == theta(i));
    }
  }
  CHECK(ledger.gradient_units(Phase::Coarse) == r.iterations * dec.coarse.size());

  // a stationary coarse problem stays put
  const CoarseResult again = coarse_step(obj, r.theta, r.loss, dec, cfg, nullptr);
  CHECK((again.theta - r.theta).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("single-level degeneracy reproduces plain LBFGS") {
  const SmallPinn p;
  const PinnObjective obj(p.problem, p.spec);
  const Vector theta0 = init_xavier(ParamLayout(p.spec), 7);
  SchwarzConfig cfg;
  cfg.subdomains = 1;
  cfg.overlap = 0;
  cfg.local_iters = 0;
  cfg.coarse_iters = 0;
  cfg.sync = SyncStrategy::SingleDamped;
  cfg.max_epochs = 15;
  cfg.threads = 1;
  cfg.restart_global = false;
  Vector a = theta0, b = theta0;
  CostLedger la(obj.size()), lb(obj.size());
  const EpochTrace tl = train_tl(obj, a, decompose(p.spec, 1, 0), cfg, la);
  const EpochTrace plain = train_lbfgs(obj, b, cfg.global, 15, 0.0, lb);
  REQUIRE(tl.epochs.size() == plain.epochs.size());
  for (std::size_t k = 0; k < tl.epochs.size(); ++k) CHECK(tl.epochs[k].loss_end == plain.epochs[k].loss_end);
  CHECK((a.array() == b.array()).all());
}

TEST_CASE("two-level epochs are monotone and decrease the loss") {
  const SmallPinn p;
  const PinnObjective obj(p.problem, p.spec);
  Vector theta = init_xavier(ParamLayout(p.spec), 9);
  const double start = obj.value(theta);
  for (auto sync : {SyncStrategy::Sequential, SyncStrategy::SingleDamped, SyncStrategy::OverlapAverage}) {
    SchwarzConfig cfg;
    cfg.subdomains = 3;
    cfg.overlap = 1;
    cfg.local_iters = 5;
    cfg.coarse_iters = 3;
    cfg.sync = sync;
    cfg.max_epochs = 4;
    cfg.threads = 1;
    Vector t = theta;
    CostLedger ledger(obj.size());
    Index calls = 0;
    const EpochTrace trace = train_tl(obj, t, decompose(p.spec, 3, 1), cfg, ledger, [&](EpochRecord& r, const Vector&) {
      ++calls;
      r.error = 1.0;
      return true;
    });
    CHECK(calls == 4);
    CHECK(trace.violations() == 0);
    CHECK(trace.epochs.back().loss_end < start);
    CHECK(trace.epochs.back().loss_end == obj.value(t));
    CHECK(trace.epochs.back().error == 1.0);
    if (sync == SyncStrategy::Sequential) CHECK(trace.epochs[0].gammas.size() == 3);
  }
}

TEST_CASE("training stops at the loss tolerance and on callback request") {
  const ParamLayout layout(NetworkSpec::mlp({2, 3, 1}));
  const auto q = layer_quadratic(layout, 2);
  const auto obj = quadratic(q.A, q.b);
  SchwarzConfig cfg = exact_config(2);
  cfg.tolerance = 1e-20;
  cfg.max_epochs = 50;
  Vector theta = Vector::Zero(layout.size());
  CostLedger ledger(layout.size());
  const EpochTrace trace = train_tl(obj, theta, decompose(layout, 2, 0), cfg, ledger);
  CHECK(trace.converged);
  CHECK(trace.epochs.size() < 50);

  Vector t2 = Vector::Zero(layout.size());
  CostLedger l2(layout.size());
  const EpochTrace stopped = train_lbfgs(obj, t2, LbfgsConfig{}, 50, 0.0, l2, [](EpochRecord& r, const Vector&) {
    return r.epoch < 3;
  });
  CHECK(stopped.epochs.size() == 3);
}

TEST_CASE("epoch cost follows the two-level cost table") {
  // two equal layers, two subdomains without overlap
  const ParamLayout layout(NetworkSpec::mlp({3, 3, 3}));
  const Index n = layout.size();
  REQUIRE(n == 24);
  const auto q = layer_quadratic(layout, 12);
  const auto obj = quadratic(q.A, q.b);
  SchwarzConfig cfg;
  cfg.subdomains = 2;
  cfg.local_iters = 2;
  cfg.coarse_iters = 1;
  cfg.threads = 1;
  const Decomposition dec = decompose(layout, 2, 0);
  REQUIRE(dec.coarse.size() == n);
  Vector theta = Vector::Constant(n, 2.0);
  CostLedger ledger(n);
  TlState state{LbfgsState(3, 1e-12)};
  tl_epoch(obj, theta, dec, cfg, ledger, state);
  const Index m = 3;
  // g_e = 2 + k_s (n_s/n) per subdomain + k_0 (n_0/n)
  CHECK(ledger.gradient_units() == 2 * n + 2 * (2 * 12) + 1 * n);
  CHECK(ledger.gradient_evaluations() == 2.0 + 2.0 * 2.0 * 0.5 + 1.0);
  // UC = 2n + 4mn + sum_s (n_s/n) k_s UC_s + (n_0/n) k_0 UC_0 with UC_x = n + 4mn
  const std::int64_t uc_full = n + 4 * m * n;
  CHECK(ledger.update_cost() == 2 * n + 4 * m * n + 2 * (2 * uc_full / 2) + uc_full);
  CHECK(ledger.update_cost(Phase::Local) == 2 * 2 * 12 * (1 + 4 * m));
}
