#pragma once

#include "tlas/network/network.hpp"
#include "tlas/schwarz/schwarz.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tlas::cli {

/// Invalid configuration (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class OptimizerKind { Lbfgs, Sl, Tl };

OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind k);

enum class ProblemKind { Burgers, DiffusionAdvection, AllenCahn, Adv, Dond };

ProblemKind parse_problem(const std::string& name);
std::string to_string(ProblemKind k);
bool is_pinn(ProblemKind k);

struct ProblemConfig {
  ProblemKind kind = ProblemKind::Burgers;
  Index points = 1000;          // PINN collocation points
  Index reference_grid = 256;   // PINN reference grid per axis
  Index train_samples = 1000;   // adv
  Index test_samples = 1000;    // adv
  std::uint64_t data_seed = 0;  // adv
  std::string train_file;       // dond
  std::string test_file;        // dond
  Index pod = 16;               // POD rank; 0 selects a trunk network
  std::vector<Index> trunk;     // trunk widths when pod = 0
};

/// Fully resolved run description. Every field has a value after parsing.
struct RunConfig {
  ProblemConfig problem;
  NetworkSpec network;
  OptimizerKind optimizer = OptimizerKind::Tl;
  LbfgsConfig lbfgs;
  SchwarzConfig schwarz;
  Index epochs = 100;
  double tolerance = 0.0;
  std::vector<std::uint64_t> seeds{1};
  std::string output = "run";
  bool wall_clock = true;

  /// Schwarz settings actually used by the optimizer (LBFGS gives none).
  SchwarzConfig resolved_schwarz() const;
};

/// Parses INI text. Unknown sections or keys and malformed values raise
/// ConfigError naming the offending field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical INI text of a resolved configuration; parsing it gives the same
/// configuration back.
std::string render_config(const RunConfig& cfg);

std::string read_file(const std::string& path);

}  // namespace tlas::cli
