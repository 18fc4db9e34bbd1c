#include "tlas/optimizer/lbfgs.hpp"

#include <cmath>
#include <limits>

namespace tlas {

void LbfgsConfig::validate() const {
  if (memory < 0) throw Error("LBFGS memory must be non-negative");
  if (momentum < 0.0 || momentum >= 1.0) throw Error("momentum must lie in [0, 1)");
  if (curvature_guard < 0.0) throw Error("curvature guard must be non-negative");
  wolfe.validate();
}

bool LbfgsState::push(const Vector& s, const Vector& y) {
  if (memory_ == 0) return false;
  const double sy = s.dot(y);
  if (!(sy > guard_ * s.norm() * y.norm())) return false;
  s_.push_back(s);
  y_.push_back(y);
  while (static_cast<Index>(s_.size()) > memory_) {
    s_.pop_front();
    y_.pop_front();
  }
  return true;
}

void LbfgsState::clear() {
  s_.clear();
  y_.clear();
  if (velocity.size() > 0) velocity.setZero();
}

Vector lbfgs_direction(const LbfgsState& state, const Vector& g) {
  if (state.empty()) return -g;
  const auto& S = state.s();
  const auto& Y = state.y();
  const std::size_t k = S.size();
  std::vector<double> rho(k), a(k);
  Vector q = g;
  for (std::size_t i = k; i-- > 0;) {
    rho[i] = 1.0 / Y[i].dot(S[i]);
    a[i] = rho[i] * S[i].dot(q);
    q -= a[i] * Y[i];
  }
  const double gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
  Vector r = gamma * q;
  for (std::size_t i = 0; i < k; ++i) {
    const double b = rho[i] * Y[i].dot(r);
    r += (a[i] - b) * S[i];
  }
  return -r;
}

namespace {

struct Trial {
  double alpha;
  Evaluation eval;
};

}  // namespace

LbfgsResult lbfgs_run(const Objective& objective, const Vector& theta0, const LbfgsConfig& cfg,
                      const LbfgsOptions& options, CostLedger* ledger, const Evaluation* initial,
                      LbfgsState* state) {
  cfg.validate();
  const Index n = objective.size();
  if (theta0.size() != n) throw Error("starting point has the wrong length");
  const IndexMap map = options.map ? *options.map : IndexMap::all(n);
  const std::vector<char> mask = options.map ? map.mask(n) : std::vector<char>{};
  const std::vector<char>* active = options.map ? &mask : nullptr;
  const Index na = map.size();

  LbfgsState own(cfg.memory, cfg.curvature_guard);
  LbfgsState& st = state ? *state : own;
  if (st.velocity.size() != na) {
    st.clear();
    st.velocity = Vector::Zero(na);
  }

  LbfgsResult result;
  result.theta = theta0;
  Evaluation cur;
  if (initial) {
    if (initial->grad.size() != n) throw Error("supplied initial gradient has the wrong length");
    cur = *initial;
  } else {
    cur = objective.evaluate(theta0, active);
    ++result.evaluations;
    if (ledger && options.charge_initial) ledger->charge_gradient(options.phase, na);
  }

  Vector x = restrict_to(theta0, map);
  Vector g = restrict_to(cur.grad, map);
  Vector trial_theta = theta0;
  std::vector<Trial> trials;
  int consecutive_failures = 0;

  for (Index it = 0; it < options.max_iters; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= options.tolerance) {
      result.converged = true;
      break;
    }
    Vector p = lbfgs_direction(st, g);
    if (!(g.dot(p) < 0.0)) {
      st.clear();
      p = -g;
    }
    Vector q = p + cfg.momentum * st.velocity;
    if (!(g.dot(q) < 0.0)) q = p;
    const double dphi0 = g.dot(q);

    WolfeConfig wolfe = cfg.wolfe;
    if (st.empty()) wolfe.initial_step = std::min(1.0, 1.0 / g.lpNorm<1>());

    trials.clear();
    auto phi = [&](double alpha) {
      Vector xa = x + alpha * q;
      prolong_scatter(xa, map, trial_theta);
      Trial t{alpha, {}};
      try {
        t.eval = objective.evaluate(trial_theta, active);
      } catch (const NonFiniteError&) {
        return LineSample{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::quiet_NaN()};
      }
      const double slope = restrict_to(t.eval.grad, map).dot(q);
      const LineSample s{t.eval.loss, slope};
      trials.push_back(std::move(t));
      return s;
    };
    const LineSearchResult ls = wolfe_linesearch(phi, cur.loss, dphi0, wolfe);
    result.evaluations += ls.evaluations;
    ++result.iterations;
    if (ledger) ledger->ledger_charge(options.phase, na, cfg.memory);

    if (options.record_steps) {
      result.steps.push_back(StepRecord{ls.alpha, cur.loss, dphi0, ls.value, ls.slope, ls.status});
    }
    if (ls.status == StepStatus::Failed) {
      st.clear();
      if (++consecutive_failures >= 2) {
        result.failed = true;
        break;
      }
      continue;
    }
    consecutive_failures = 0;
    if (ls.status == StepStatus::Degraded) ++result.degraded_steps;

    Evaluation next;
    for (auto& t : trials) {
      if (t.alpha == ls.alpha) next = std::move(t.eval);
    }
    const Vector x_new = x + ls.alpha * q;
    const Vector g_new = restrict_to(next.grad, map);
    st.push(x_new - x, g_new - g);
    st.velocity = ls.alpha * q;
    x = x_new;
    g = g_new;
    cur = std::move(next);
  }

  prolong_scatter(x, map, result.theta);
  result.loss = cur.loss;
  result.grad = std::move(cur.grad);
  if (!result.converged && g.lpNorm<Eigen::Infinity>() <= options.tolerance) result.converged = true;
  if (ledger) {
    ledger->count_evaluations(result.evaluations);
    ledger->note_memory(lbfgs_memory(na, cfg.memory));
  }
  return result;
}

}  // namespace tlas
