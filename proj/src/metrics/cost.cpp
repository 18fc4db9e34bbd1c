#include "tlas/metrics/cost.hpp"

#include <algorithm>
#include <cmath>

namespace tlas {

std::string to_string(Phase p) {
  switch (p) {
    case Phase::Global: return "global";
    case Phase::Local: return "local";
    case Phase::Coarse: return "coarse";
    case Phase::Sync: return "sync";
  }
  return "?";
}

void CostLedger::charge_gradient(Phase phase, Index n_active) {
  units_[static_cast<std::size_t>(phase)] += n_active;
}

void CostLedger::ledger_charge(Phase phase, Index n_active, Index m, Index iterations) {
  units_[static_cast<std::size_t>(phase)] += n_active * iterations;
  uc_[static_cast<std::size_t>(phase)] += (n_active + 4 * m * n_active) * iterations;
}

void CostLedger::charge_update(Phase phase, Index flops) { uc_[static_cast<std::size_t>(phase)] += flops; }

void CostLedger::note_memory(std::int64_t words) { mc_ = std::max(mc_, words); }

void CostLedger::merge(const CostLedger& other) {
  for (std::size_t p = 0; p < kPhaseCount; ++p) {
    units_[p] += other.units_[p];
    uc_[p] += other.uc_[p];
  }
  mc_ = std::max(mc_, other.mc_);
  evaluations_ += other.evaluations_;
}

std::int64_t CostLedger::gradient_units() const {
  std::int64_t s = 0;
  for (auto u : units_) s += u;
  return s;
}

std::int64_t CostLedger::update_cost() const {
  std::int64_t s = 0;
  for (auto u : uc_) s += u;
  return s;
}

double CostLedger::gradient_evaluations() const {
  if (n_ <= 0) throw Error("cost ledger has no parameter count");
  return static_cast<double>(gradient_units()) / static_cast<double>(n_);
}

double CostLedger::gradient_evaluations(Phase p) const {
  if (n_ <= 0) throw Error("cost ledger has no parameter count");
  return static_cast<double>(gradient_units(p)) / static_cast<double>(n_);
}

std::int64_t lbfgs_memory(Index n, Index m) { return n + 2 * m * n; }

double speedup(double cost_a, double cost_b) {
  if (cost_b == 0.0) throw Error("speedup: zero denominator");
  if (!std::isfinite(cost_a) || !std::isfinite(cost_b)) throw Error("speedup: non-finite cost");
  return cost_a / cost_b;
}

}  // namespace tlas
