#pragma once

#include "tlas/autodiff/tape.hpp"

#include <functional>
#include <vector>

namespace tlas {

struct Evaluation {
  double loss = 0.0;
  Vector grad;  // full length, zero outside the active coordinates
};

/// Differentiable loss over the full parameter vector. Implementations must
/// allow concurrent calls.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual Index size() const = 0;
  virtual double value(const Vector& theta) const = 0;
  virtual Evaluation evaluate(const Vector& theta, const std::vector<char>* active = nullptr) const = 0;
};

/// Objective recorded on a tape by a loss closure.
class ClosureObjective : public Objective {
 public:
  ClosureObjective(Index n, ad::LossClosure closure) : n_(n), closure_(std::move(closure)) {}
  Index size() const override { return n_; }
  double value(const Vector& theta) const override;
  Evaluation evaluate(const Vector& theta, const std::vector<char>* active = nullptr) const override;

 private:
  Index n_;
  ad::LossClosure closure_;
};

/// Objective from explicit value and gradient functions.
class FunctionObjective : public Objective {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradFn = std::function<Vector(const Vector&)>;
  FunctionObjective(Index n, ValueFn f, GradFn g) : n_(n), f_(std::move(f)), g_(std::move(g)) {}
  Index size() const override { return n_; }
  double value(const Vector& theta) const override { return f_(theta); }
  Evaluation evaluate(const Vector& theta, const std::vector<char>* active = nullptr) const override;

 private:
  Index n_;
  ValueFn f_;
  GradFn g_;
};

}  // namespace tlas
