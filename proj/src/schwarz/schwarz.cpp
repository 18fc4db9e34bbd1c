#include "tlas/schwarz/schwarz.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <thread>

namespace tlas {

SyncStrategy parse_sync(const std::string& name) {
  if (name == "sequential" || name == "layer-wise-sequential") return SyncStrategy::Sequential;
  if (name == "single-damped" || name == "single") return SyncStrategy::SingleDamped;
  if (name == "overlap-average" || name == "average") return SyncStrategy::OverlapAverage;
  throw Error("unknown sync strategy '" + name + "' (expected sequential, single-damped or overlap-average)");
}

std::string to_string(SyncStrategy s) {
  switch (s) {
    case SyncStrategy::Sequential: return "sequential";
    case SyncStrategy::SingleDamped: return "single-damped";
    case SyncStrategy::OverlapAverage: return "overlap-average";
  }
  return "?";
}

void SchwarzConfig::validate() const {
  if (subdomains < 1) throw Error("subdomains must be at least 1");
  if (overlap < 0) throw Error("overlap must be non-negative");
  if (local_iters < 0) throw Error("local_iters must be non-negative");
  if (coarse_iters < 0) throw Error("coarse_iters must be non-negative");
  if (global_steps < 1) throw Error("global_steps must be at least 1");
  if (max_epochs < 0) throw Error("max_epochs must be non-negative");
  if (local_tolerance < 0.0 || coarse_tolerance < 0.0) throw Error("solver tolerances must be non-negative");
  if (gamma_halvings < 0) throw Error("gamma_halvings must be non-negative");
  if (threads < 0) throw Error("threads must be non-negative");
  global.validate();
  local.validate();
  coarse.validate();
}

int thread_count_from_env() {
  const char* v = std::getenv("TLAS_THREADS");
  if (!v || !*v) return 1;
  int n = 0;
  const auto [end, ec] = std::from_chars(v, v + std::strlen(v), n);
  if (ec != std::errc() || *end != '\0' || n < 1) throw Error("TLAS_THREADS must be a positive integer");
  return n;
}

CoarseResult coarse_step(const Objective& objective, const Vector& theta, double loss,
                         const Decomposition& decomposition, const SchwarzConfig& cfg, CostLedger* ledger) {
  if (cfg.coarse_iters == 0 || decomposition.coarse.empty()) return CoarseResult{theta, loss, 0, false};
  LbfgsOptions opt;
  opt.max_iters = cfg.coarse_iters;
  opt.tolerance = cfg.coarse_tolerance;
  opt.map = decomposition.coarse;
  opt.phase = Phase::Coarse;
  opt.charge_initial = false;
  LbfgsResult r = lbfgs_run(objective, theta, cfg.coarse, opt, ledger);
  return CoarseResult{std::move(r.theta), r.loss, r.iterations, r.failed};
}

LocalResult local_solve_all(const Objective& objective, const Vector& theta_hat,
                            const Decomposition& decomposition, const SchwarzConfig& cfg, CostLedger* ledger,
                            const std::vector<Index>* order) {
  const auto count = static_cast<std::size_t>(decomposition.subdomains);
  const Index n = theta_hat.size();
  std::vector<Index> sequence(count);
  for (std::size_t s = 0; s < count; ++s) sequence[s] = static_cast<Index>(s);
  if (order) {
    std::vector<Index> sorted = *order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != sequence) throw Error("solve order must be a permutation of the subdomains");
    sequence = *order;
  }

  LocalResult out;
  out.directions.assign(count, Vector::Zero(n));
  out.failed.assign(count, 0);
  std::vector<CostLedger> ledgers(count, CostLedger(ledger ? ledger->parameters() : n));
  std::vector<Index> evals(count, 0);
  std::vector<std::exception_ptr> errors(count);

  auto solve = [&](std::size_t s) {
    if (cfg.local_iters == 0) return;
    try {
      LbfgsOptions opt;
      opt.max_iters = cfg.local_iters;
      opt.tolerance = cfg.local_tolerance;
      opt.map = decomposition.maps[s];
      opt.phase = Phase::Local;
      opt.charge_initial = false;
      const LbfgsResult r = lbfgs_run(objective, theta_hat, cfg.local, opt, &ledgers[s]);
      evals[s] = r.evaluations;
      if (r.failed) {
        out.failed[s] = 1;
      } else {
        out.directions[s] = r.theta - theta_hat;
      }
    } catch (const NonFiniteError&) {
      out.failed[s] = 1;
    } catch (...) {
      errors[s] = std::current_exception();
    }
  };

  const int workers = std::min<int>(cfg.threads > 0 ? cfg.threads : thread_count_from_env(), static_cast<int>(count));
  if (workers <= 1) {
    for (Index s : sequence) solve(static_cast<std::size_t>(s));
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t k = static_cast<std::size_t>(w); k < count; k += static_cast<std::size_t>(workers)) {
          solve(static_cast<std::size_t>(sequence[k]));
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t s = 0; s < count; ++s) {
    if (ledger) ledger->merge(ledgers[s]);
    out.evaluations += evals[s];
  }
  return out;
}

namespace {

struct Damping {
  double gamma = 0.0;
  double loss = 0.0;
  Index evaluations = 0;
};

// Largest gamma in {1, 1/2, ...} that strictly lowers the loss along d.
Damping damp(const Objective& objective, const Vector& x, double loss, const Vector& d, int halvings) {
  Damping out{0.0, loss, 0};
  if (d.isZero(0.0)) return out;
  double gamma = 1.0;
  for (int k = 0; k <= halvings; ++k, gamma *= 0.5) {
    double trial;
    try {
      trial = objective.value(x + gamma * d);
    } catch (const NonFiniteError&) {
      trial = std::numeric_limits<double>::infinity();
    }
    ++out.evaluations;
    if (trial < loss) {
      out.gamma = gamma;
      out.loss = trial;
      return out;
    }
  }
  return out;
}

}  // namespace

SyncResult synchronize(const Objective& objective, const Vector& theta_hat, double loss_hat,
                       const std::vector<Vector>& directions, const Decomposition& decomposition,
                       SyncStrategy strategy, const SchwarzConfig& cfg, CostLedger* ledger) {
  if (directions.size() != static_cast<std::size_t>(decomposition.subdomains)) {
    throw Error("synchronize: one direction per subdomain expected");
  }
  for (std::size_t s = 0; s < directions.size(); ++s) {
    const Vector& d = directions[s];
    if (d.size() != theta_hat.size()) throw Error("synchronize: direction has the wrong length");
    const std::vector<char> mask = decomposition.maps[s].mask(d.size());
    for (Index i = 0; i < d.size(); ++i) {
      if (!mask[static_cast<std::size_t>(i)] && d(i) != 0.0) {
        throw Error("synchronize: direction " + std::to_string(s) + " leaves its subdomain");
      }
    }
  }

  SyncResult out;
  out.theta = theta_hat;
  out.loss = loss_hat;
  if (strategy == SyncStrategy::Sequential) {
    for (const Vector& d : directions) {
      const Damping g = damp(objective, out.theta, out.loss, d, cfg.gamma_halvings);
      out.evaluations += g.evaluations;
      out.gammas.push_back(g.gamma);
      if (g.gamma > 0.0) {
        out.theta += g.gamma * d;
        out.loss = g.loss;
      }
    }
  } else {
    Vector d = Vector::Zero(theta_hat.size());
    for (const Vector& ds : directions) d += ds;
    if (strategy == SyncStrategy::OverlapAverage) {
      const Vector mult = decomposition.multiplicity();
      for (Index i = 0; i < d.size(); ++i) {
        if (mult(i) > 1.0) d(i) /= mult(i);
      }
    }
    const Damping g = damp(objective, out.theta, out.loss, d, cfg.gamma_halvings);
    out.evaluations += g.evaluations;
    out.gammas.push_back(g.gamma);
    if (g.gamma > 0.0) {
      out.theta += g.gamma * d;
      out.loss = g.loss;
    }
  }
  if (ledger) ledger->count_evaluations(out.evaluations);
  return out;
}

Index EpochTrace::violations() const {
  Index v = 0;
  for (const auto& e : epochs) {
    if (e.loss_coarse > e.loss_start || e.loss_sync > e.loss_coarse || e.loss_end > e.loss_sync) ++v;
  }
  return v;
}

EpochRecord tl_epoch(const Objective& objective, Vector& theta, const Decomposition& decomposition,
                     const SchwarzConfig& cfg, CostLedger& ledger, TlState& state) {
  const auto start = std::chrono::steady_clock::now();
  const Index n = objective.size();
  if (decomposition.parameter_count != n) throw Error("decomposition does not match the objective size");
  if (std::isnan(state.loss)) {
    state.loss = objective.value(theta);
    ledger.count_evaluations(1);
  }
  EpochRecord rec;
  rec.loss_start = state.loss;

  const CoarseResult coarse = coarse_step(objective, theta, state.loss, decomposition, cfg, &ledger);
  rec.loss_coarse = coarse.loss;
  rec.coarse_failed = coarse.failed;

  const LocalResult local = local_solve_all(objective, coarse.theta, decomposition, cfg, &ledger);
  for (char f : local.failed) rec.local_failures += f ? 1 : 0;

  const SyncResult sync =
      synchronize(objective, coarse.theta, coarse.loss, local.directions, decomposition, cfg.sync, cfg, &ledger);
  ledger.charge_update(Phase::Sync, n);
  rec.loss_sync = sync.loss;
  rec.gammas = sync.gammas;

  const Evaluation at_half = objective.evaluate(sync.theta);
  ledger.charge_gradient(Phase::Global, n);
  ledger.count_evaluations(1);
  LbfgsOptions opt;
  opt.max_iters = cfg.global_steps;
  opt.phase = Phase::Global;
  opt.charge_initial = false;
  if (cfg.restart_global) state.global.clear();
  LbfgsResult r = lbfgs_run(objective, sync.theta, cfg.global, opt, &ledger, &at_half, &state.global);
  rec.global_failed = r.failed;
  rec.loss_end = r.loss;
  theta = std::move(r.theta);
  state.loss = r.loss;
  rec.gradient_evaluations = ledger.gradient_evaluations();
  rec.update_cost = ledger.update_cost();
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

Reach first_reach(const EpochTrace& trace, double target) {
  for (const auto& r : trace.epochs) {
    if (r.error <= target) return Reach{r.epoch, r.gradient_evaluations, r.update_cost};
  }
  return {};
}

EpochTrace train_tl(const Objective& objective, Vector& theta, const Decomposition& decomposition,
                    const SchwarzConfig& cfg, CostLedger& ledger, const EpochCallback& callback) {
  cfg.validate();
  EpochTrace trace;
  TlState state{LbfgsState(cfg.global.memory, cfg.global.curvature_guard), std::numeric_limits<double>::quiet_NaN()};
  for (Index k = 0; k < cfg.max_epochs; ++k) {
    if (!std::isnan(state.loss) && state.loss <= cfg.tolerance) {
      trace.converged = true;
      break;
    }
    EpochRecord rec = tl_epoch(objective, theta, decomposition, cfg, ledger, state);
    rec.epoch = k + 1;
    const bool more = callback ? callback(rec, theta) : true;
    trace.epochs.push_back(std::move(rec));
    if (!more) break;
  }
  if (!std::isnan(state.loss) && state.loss <= cfg.tolerance) trace.converged = true;
  return trace;
}

EpochTrace train_lbfgs(const Objective& objective, Vector& theta, const LbfgsConfig& cfg, Index max_epochs,
                       double tolerance, CostLedger& ledger, const EpochCallback& callback) {
  cfg.validate();
  EpochTrace trace;
  const Index n = objective.size();
  LbfgsState state(cfg.memory, cfg.curvature_guard);
  Evaluation cur = objective.evaluate(theta);
  ledger.charge_gradient(Phase::Global, n);
  ledger.count_evaluations(1);
  LbfgsOptions opt;
  opt.max_iters = 1;
  opt.charge_initial = false;
  for (Index k = 0; k < max_epochs; ++k) {
    if (cur.loss <= tolerance) {
      trace.converged = true;
      break;
    }
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = k + 1;
    rec.loss_start = rec.loss_coarse = rec.loss_sync = cur.loss;
    LbfgsResult r = lbfgs_run(objective, theta, cfg, opt, &ledger, &cur, &state);
    rec.global_failed = r.failed;
    rec.loss_end = r.loss;
    theta = std::move(r.theta);
    cur = Evaluation{r.loss, std::move(r.grad)};
    rec.gradient_evaluations = ledger.gradient_evaluations();
    rec.update_cost = ledger.update_cost();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool more = callback ? callback(rec, theta) : true;
    trace.epochs.push_back(std::move(rec));
    if (!more) break;
  }
  if (cur.loss <= tolerance) trace.converged = true;
  return trace;
}

}  // namespace tlas
