#pragma once

#include "tlas/cli/config.hpp"
#include "tlas/decomposition/decomposition.hpp"
#include "tlas/optimizer/objective.hpp"
#include "tlas/problems/dataset.hpp"
#include "tlas/problems/pinn.hpp"
#include "tlas/problems/reference.hpp"

#include <memory>
#include <optional>

namespace tlas::cli {

/// One CSV row. Row 0 describes the initial parameters.
struct RunRow {
  Index epoch = 0;
  double loss = 0.0;
  double rel_error = 0.0;
  std::vector<double> gammas;
  double cum_ge = 0.0;
  std::int64_t cum_uc = 0;
  double wall_ms = 0.0;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<RunRow> rows;
  Index violations = 0;
};

/// Problem data, objective and error evaluator built once per configuration
/// and shared (read-only) by all seeds.
class Experiment {
 public:
  explicit Experiment(const RunConfig& cfg);
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;

  const RunConfig& config() const { return cfg_; }
  const Objective& objective() const { return *objective_; }
  const ParamLayout& layout() const { return layout_; }
  std::optional<Decomposition> decomposition() const;

  Vector initial(std::uint64_t seed) const;
  /// Relative L2 error on the reference grid (PINN) or the test split (DON).
  double error(const Vector& theta) const;
  /// Trains one seed. `inner_threads` sets the local-solve worker count when
  /// the configuration leaves it at 0.
  RunResult run(std::uint64_t seed, int inner_threads = 1, Vector* final_theta = nullptr) const;

  const PinnProblem* pinn() const { return pinn_ ? &*pinn_ : nullptr; }
  const DonSpec* don() const { return don_ ? &*don_ : nullptr; }
  const DonDataset* test_data() const { return test_ ? &*test_ : nullptr; }

 private:
  RunConfig cfg_;
  std::optional<PinnProblem> pinn_;
  const ReferenceSolution* reference_ = nullptr;
  std::optional<DonSpec> don_;
  std::optional<DonDataset> train_, test_;
  std::unique_ptr<Objective> objective_;
  std::unique_ptr<DonObjective> test_objective_;
  ParamLayout layout_;
};

/// Runs all configured seeds, up to `workers` at a time; results are in
/// seed order.
std::vector<RunResult> run_seeds(const Experiment& experiment, int workers);

/// Number of gamma columns for a configuration (0 for plain LBFGS).
Index gamma_columns(const RunConfig& cfg);

/// Shortest round-trip decimal, independent of the locale.
std::string format_number(double v);

void write_run_csv(const std::string& path, const RunResult& result, Index gammas);
std::vector<RunRow> read_run_csv(const std::string& path);

/// Git blob object id ("blob <size>\0" + content) as lowercase hex SHA-1.
std::string git_blob_sha1(const std::string& content);

}  // namespace tlas::cli
