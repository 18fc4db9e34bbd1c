#pragma once

#include "tlas/cli/run.hpp"
#include "tlas/metrics/ntk.hpp"

#include <iosfwd>

namespace tlas::cli {

/// Trains every seed of `cfg`, writing seed_<s>.csv and manifest.ini into
/// cfg.output. The manifest holds the resolved configuration and the content
/// hashes of its inputs.
std::vector<RunResult> cmd_train(const RunConfig& cfg, int workers, std::ostream& log);

struct GendataOptions {
  Index train_samples = 1000;
  Index test_samples = 1000;
  std::uint64_t seed = 0;
  Index grid = 40;
  std::string output = ".";
};

/// Writes adv_train.dond and adv_test.dond plus JSON metadata sidecars.
void cmd_gendata(const GendataOptions& opts, std::ostream& log);

struct NtkOptions {
  Index samples = 128;       // PINN points, or DON input functions
  Index points = 64;         // DON grid points per input function
  bool layers = false;
  NtkTarget target = NtkTarget::Residual;
  Index epochs = 0;          // training epochs before the kernel is formed
  std::string output = "ntk.csv";
};

/// NTK condition report for the first seed of `cfg`, as CSV.
NtkReport cmd_ntk(const RunConfig& cfg, const NtkOptions& opts, std::ostream& log);

struct CompareEntry {
  std::string run;
  std::uint64_t seed = 0;
  double target = 0.0;
  Reach reach;
  double speedup_ge = 0.0;  // 0 when not reached
  double speedup_uc = 0.0;
};

/// First (epoch, cum_ge, cum_uc) at which the best error of `rows` is at or
/// below `target`.
Reach reach_in_rows(const std::vector<RunRow>& rows, double target);

/// Compares runs against a baseline seed by seed. The target of each seed
/// is the final error of the baseline run.
std::vector<CompareEntry> compare_runs(const std::vector<std::pair<std::string, std::vector<std::vector<RunRow>>>>& runs,
                                       const std::vector<std::uint64_t>& seeds);

/// Accepts run directories (with manifest.ini) or configuration files, which
/// are trained first. The first input is the baseline.
std::vector<CompareEntry> cmd_compare(const std::vector<std::string>& inputs, const std::string& output, int workers,
                                      std::ostream& log);

/// Command-line entry point. Exit codes: 0 ok, 1 bad configuration or usage,
/// 2 runtime failure.
int run_cli(int argc, char** argv);

}  // namespace tlas::cli
