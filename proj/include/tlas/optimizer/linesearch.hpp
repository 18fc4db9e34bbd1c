#pragma once

#include "tlas/autodiff/dense.hpp"

#include <functional>

namespace tlas {

struct WolfeConfig {
  double c1 = 1e-4;
  double c2 = 0.9;
  /// Maximum trial evaluations of phi.
  int max_evals = 25;
  double initial_step = 1.0;
  double max_step = 1e10;

  void validate() const;
};

/// phi(alpha) and phi'(alpha) along a search direction.
struct LineSample {
  double value = 0.0;
  double slope = 0.0;
};
using LineFunction = std::function<LineSample(double alpha)>;

enum class StepStatus {
  Wolfe,     // both strong Wolfe conditions hold
  Degraded,  // budget exhausted; best sufficient-decrease step returned
  Failed,    // no step with sufficient decrease; alpha = 0
};

struct LineSearchResult {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;
  StepStatus status = StepStatus::Failed;
  int evaluations = 0;
};

/// Bracketing and zoom line search with cubic interpolation for the strong
/// Wolfe conditions. Throws when phi'(0) >= 0.
LineSearchResult wolfe_linesearch(const LineFunction& phi, double phi0, double dphi0, const WolfeConfig& cfg);

/// Minimizer of the cubic interpolating (a, fa, ga) and (b, fb, gb),
/// safeguarded into the interior of [a, b]; bisection when degenerate.
double cubic_step(double a, double fa, double ga, double b, double fb, double gb);

}  // namespace tlas
