#pragma once

#include "tlas/autodiff/dense.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace tlas {

enum class Phase { Global = 0, Local = 1, Coarse = 2, Sync = 3 };
inline constexpr std::size_t kPhaseCount = 4;
std::string to_string(Phase p);

/// Cost counters in the units of the LBFGS / TL-LBFGS cost table.
///
/// Gradient evaluations are stored as parameter-weighted units: a gradient
/// evaluation restricted to n_active parameters adds n_active units, so
/// g_e = units / n exactly. Update cost is in flops (n + 4mn per LBFGS
/// iteration on n parameters); memory cost holds the peak of the formula
/// values reported so far.
class CostLedger {
 public:
  CostLedger() = default;
  explicit CostLedger(Index n) : n_(n) {}

  Index parameters() const { return n_; }

  /// One gradient evaluation over `n_active` parameters.
  void charge_gradient(Phase phase, Index n_active);
  /// `iterations` LBFGS iterations over `n_active` parameters with memory m:
  /// each adds one gradient evaluation and n_active (1 + 4m) flops.
  void ledger_charge(Phase phase, Index n_active, Index m, Index iterations = 1);
  /// Length-n vector update (synchronization recombination).
  void charge_update(Phase phase, Index flops);
  void note_memory(std::int64_t words);
  /// Actual objective evaluations, independent of the cost model.
  void count_evaluations(Index count) { evaluations_ += count; }
  void merge(const CostLedger& other);

  std::int64_t gradient_units() const;
  std::int64_t gradient_units(Phase p) const { return units_[static_cast<std::size_t>(p)]; }
  std::int64_t update_cost() const;
  std::int64_t update_cost(Phase p) const { return uc_[static_cast<std::size_t>(p)]; }
  std::int64_t memory_cost() const { return mc_; }
  Index evaluations() const { return evaluations_; }
  /// Gradient evaluations in units of full-network evaluations.
  double gradient_evaluations() const;
  double gradient_evaluations(Phase p) const;

 private:
  Index n_ = 0;
  std::array<std::int64_t, kPhaseCount> units_{};
  std::array<std::int64_t, kPhaseCount> uc_{};
  std::int64_t mc_ = 0;
  Index evaluations_ = 0;
};

/// Memory formula values: n + 2mn for LBFGS on n parameters.
std::int64_t lbfgs_memory(Index n, Index m);

/// Cost ratio cost_a / cost_b.
double speedup(double cost_a, double cost_b);

}  // namespace tlas
