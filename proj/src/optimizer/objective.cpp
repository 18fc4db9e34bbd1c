#include "tlas/optimizer/objective.hpp"

namespace tlas {

double ClosureObjective::value(const Vector& theta) const { return ad::evaluate(closure_, theta); }

Evaluation ClosureObjective::evaluate(const Vector& theta, const std::vector<char>* active) const {
  auto vg = ad::reverse_grad(closure_, theta, active);
  return Evaluation{vg.loss, std::move(vg.grad)};
}

Evaluation FunctionObjective::evaluate(const Vector& theta, const std::vector<char>* active) const {
  Evaluation e{f_(theta), g_(theta)};
  if (e.grad.size() != n_) throw Error("gradient function returned the wrong length");
  if (active) {
    for (Index i = 0; i < n_; ++i) {
      if (!(*active)[static_cast<std::size_t>(i)]) e.grad[i] = 0.0;
    }
  }
  return e;
}

}  // namespace tlas
