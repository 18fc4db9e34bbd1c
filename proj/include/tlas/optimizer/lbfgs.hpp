#pragma once

#include "tlas/decomposition/decomposition.hpp"
#include "tlas/metrics/cost.hpp"
#include "tlas/optimizer/linesearch.hpp"
#include "tlas/optimizer/objective.hpp"

#include <deque>
#include <optional>
#include <vector>

namespace tlas {

struct LbfgsConfig {
  Index memory = 3;
  double momentum = 0.9;
  double curvature_guard = 1e-12;
  WolfeConfig wolfe;

  void validate() const;
};

/// Secant pairs and momentum velocity, in the solver's local coordinates.
class LbfgsState {
 public:
  LbfgsState() = default;
  LbfgsState(Index memory, double guard) : memory_(memory), guard_(guard) {}

  /// Stores (s, y) when s^T y > guard |s| |y|; drops the oldest pair when full.
  bool push(const Vector& s, const Vector& y);
  void clear();
  std::size_t pairs() const { return s_.size(); }
  bool empty() const { return s_.empty(); }
  Index memory() const { return memory_; }
  const std::deque<Vector>& s() const { return s_; }
  const std::deque<Vector>& y() const { return y_; }

  Vector velocity;

 private:
  Index memory_ = 3;
  double guard_ = 1e-12;
  std::deque<Vector> s_, y_;
};

/// Two-loop recursion: p = -H g with initial scaling s^T y / y^T y of the
/// newest pair; p = -g when the memory is empty.
Vector lbfgs_direction(const LbfgsState& state, const Vector& g);

struct StepRecord {
  double alpha = 0.0;
  double phi0 = 0.0, dphi0 = 0.0;
  double phi = 0.0, dphi = 0.0;
  StepStatus status = StepStatus::Failed;
};

struct LbfgsOptions {
  Index max_iters = 100;
  /// Stop when the active gradient satisfies |g|_inf <= tolerance.
  double tolerance = 0.0;
  /// Coordinates to optimize; all when empty. The complement stays frozen.
  std::optional<IndexMap> map;
  Phase phase = Phase::Global;
  /// Charge the gradient at the starting point to the ledger.
  bool charge_initial = true;
  bool record_steps = false;
};

struct LbfgsResult {
  Vector theta;
  double loss = 0.0;
  Vector grad;  // full length, zero outside the active coordinates
  Index iterations = 0;
  Index evaluations = 0;
  bool converged = false;
  bool failed = false;  // two consecutive line-search failures
  int degraded_steps = 0;
  std::vector<StepRecord> steps;
};

/// LBFGS with momentum and strong-Wolfe steps on the active coordinates.
///
/// The momentum term is folded into the searched direction q = p + beta v
/// (falling back to p when q is not a descent direction), the step is
/// theta += alpha q and the velocity becomes v = alpha q, so every accepted
/// step passes the line search. `initial` supplies the evaluation at theta0;
/// `state` carries memory across calls (a fresh one is used when null).
LbfgsResult lbfgs_run(const Objective& objective, const Vector& theta0, const LbfgsConfig& cfg,
                      const LbfgsOptions& options, CostLedger* ledger = nullptr,
                      const Evaluation* initial = nullptr, LbfgsState* state = nullptr);

}  // namespace tlas
