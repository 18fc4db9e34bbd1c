#pragma once

#include "tlas/decomposition/decomposition.hpp"
#include "tlas/metrics/cost.hpp"
#include "tlas/optimizer/lbfgs.hpp"
#include "tlas/optimizer/objective.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace tlas {

enum class SyncStrategy { Sequential, SingleDamped, OverlapAverage };

SyncStrategy parse_sync(const std::string& name);
std::string to_string(SyncStrategy s);

struct SchwarzConfig {
  Index subdomains = 4;
  Index overlap = 0;
  Index local_iters = 50;   // k_s
  Index coarse_iters = 0;   // k_0; 0 gives the single-level method
  SyncStrategy sync = SyncStrategy::Sequential;
  Index global_steps = 1;   // global LBFGS iterations per epoch
  bool restart_global = true;  // clear global LBFGS memory at every epoch
  double tolerance = 0.0;   // stop once the loss is <= tolerance
  Index max_epochs = 100;
  double local_tolerance = 0.0;   // gradient inf-norm stop for local solves
  double coarse_tolerance = 0.0;  // and for the coarse solve
  int gamma_halvings = 12;  // damping trials 1, 1/2, ..., 2^-gamma_halvings
  int threads = 0;          // local-solve workers; 0 reads TLAS_THREADS (default 1)
  LbfgsConfig global, local, coarse;

  void validate() const;
};

/// Worker count from TLAS_THREADS, at least 1.
int thread_count_from_env();

struct CoarseResult {
  Vector theta;
  double loss = 0.0;
  Index iterations = 0;
  bool failed = false;
};

/// theta_hat = theta + R_0^T (theta_0* - R_0 theta) with theta_0* from k_0
/// LBFGS iterations on the coarse coordinates. With k_0 = 0 returns theta.
CoarseResult coarse_step(const Objective& objective, const Vector& theta, double loss,
                         const Decomposition& decomposition, const SchwarzConfig& cfg, CostLedger* ledger);

struct LocalResult {
  std::vector<Vector> directions;  // d_s, full length, zero off subdomain s
  std::vector<char> failed;
  Index evaluations = 0;
};

/// Independent subdomain solves from the common snapshot theta_hat. `order`
/// optionally permutes the order in which solves are started; results are
/// always returned and charged in subdomain order.
LocalResult local_solve_all(const Objective& objective, const Vector& theta_hat,
                            const Decomposition& decomposition, const SchwarzConfig& cfg, CostLedger* ledger,
                            const std::vector<Index>* order = nullptr);

struct SyncResult {
  Vector theta;
  double loss = 0.0;
  std::vector<double> gammas;  // one per subdomain (sequential) or a single value
  Index evaluations = 0;
};

/// Recombines the directions. A damping trial is accepted only when it
/// strictly lowers the loss at the running point; otherwise gamma = 0.
SyncResult synchronize(const Objective& objective, const Vector& theta_hat, double loss_hat,
                       const std::vector<Vector>& directions, const Decomposition& decomposition,
                       SyncStrategy strategy, const SchwarzConfig& cfg, CostLedger* ledger);

struct EpochRecord {
  Index epoch = 0;
  double loss_start = 0.0;
  double loss_coarse = 0.0;
  double loss_sync = 0.0;
  double loss_end = 0.0;
  std::vector<double> gammas;
  Index local_failures = 0;
  bool coarse_failed = false;
  bool global_failed = false;
  double gradient_evaluations = 0.0;  // cumulative
  std::int64_t update_cost = 0;       // cumulative
  double error = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct EpochTrace {
  std::vector<EpochRecord> epochs;
  bool converged = false;
  /// Epochs whose phase losses increase (must stay 0).
  Index violations() const;
};

/// Cumulative costs at the first epoch whose error is at or below a target.
struct Reach {
  Index epoch = 0;  // 0: never reached
  double gradient_evaluations = 0.0;
  std::int64_t update_cost = 0;
  bool reached() const { return epoch > 0; }
};

Reach first_reach(const EpochTrace& trace, double target);

/// Global-optimizer memory and the current loss, carried across epochs.
struct TlState {
  LbfgsState global;
  double loss = std::numeric_limits<double>::quiet_NaN();
};

/// One epoch of the two-level method: coarse step, local solves,
/// synchronization, then `global_steps` LBFGS iterations from theta^{k+1/2}.
EpochRecord tl_epoch(const Objective& objective, Vector& theta, const Decomposition& decomposition,
                     const SchwarzConfig& cfg, CostLedger& ledger, TlState& state);

/// Called after every epoch; may fill `record.error`. Returning false stops.
using EpochCallback = std::function<bool(EpochRecord& record, const Vector& theta)>;

EpochTrace train_tl(const Objective& objective, Vector& theta, const Decomposition& decomposition,
                    const SchwarzConfig& cfg, CostLedger& ledger, const EpochCallback& callback = {});

/// Plain LBFGS baseline, one iteration per epoch (loss_coarse and loss_sync
/// equal loss_start).
EpochTrace train_lbfgs(const Objective& objective, Vector& theta, const LbfgsConfig& cfg, Index max_epochs,
                       double tolerance, CostLedger& ledger, const EpochCallback& callback = {});

}  // namespace tlas
