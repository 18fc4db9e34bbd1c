#include "tlas/problems/pinn.hpp"

#include "tlas/problems/hammersley.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace tlas {

using ad::Jet2;

PinnKind parse_pinn_kind(const std::string& name) {
  if (name == "burgers" || name == "burg") return PinnKind::Burgers;
  if (name == "da" || name == "diffusion-advection") return PinnKind::DiffusionAdvection;
  if (name == "ac" || name == "allen-cahn") return PinnKind::AllenCahn;
  throw Error("unknown PINN problem '" + name + "' (expected burgers, da or ac)");
}

const char* to_string(PinnKind kind) {
  switch (kind) {
    case PinnKind::Burgers: return "burgers";
    case PinnKind::DiffusionAdvection: return "da";
    case PinnKind::AllenCahn: return "ac";
  }
  return "?";
}

double PinnProblem::residual(const Jet2& u) const {
  switch (kind) {
    case PinnKind::Burgers: return burgers_residual(u, constants.nu);
    case PinnKind::DiffusionAdvection: return da_residual(u, constants.mu, constants.b, constants.f);
    case PinnKind::AllenCahn: return ac_residual(u, constants.diffusion);
  }
  throw Error("bad problem kind");
}

ad::Var PinnProblem::residual(const ad::JetVar& u) const {
  switch (kind) {
    case PinnKind::Burgers: return burgers_residual(u, constants.nu);
    case PinnKind::DiffusionAdvection: return da_residual(u, constants.mu, constants.b, constants.f);
    case PinnKind::AllenCahn: return ac_residual(u, constants.diffusion);
  }
  throw Error("bad problem kind");
}

namespace {

Jet2 time_space_length(std::span<const Jet2> x) { return x[0] * (x[1] + 1.0) * (x[1] - 1.0); }

}  // namespace

PinnProblem make_pinn_problem(PinnKind kind, Index collocation_count, const PinnConstants& constants) {
  if (collocation_count < 1) throw Error("collocation count must be positive");
  PinnProblem p;
  p.kind = kind;
  p.constants = constants;
  constexpr double pi = std::numbers::pi;
  switch (kind) {
    case PinnKind::Burgers:
      p.lower = {0.0, -1.0};
      p.upper = {1.0, 1.0};
      p.boundary.extension = [](std::span<const Jet2> x) { return -ad::sin(pi * x[1]); };
      p.boundary.length_factor = time_space_length;
      p.jets = ad::JetSpec{{0, 1}, {{1, 1}}};
      break;
    case PinnKind::DiffusionAdvection:
      p.lower = {0.0, 0.0};
      p.upper = {1.0, 1.0};
      p.boundary.extension = [](std::span<const Jet2>) { return Jet2::constant(0.0); };
      p.boundary.length_factor = [](std::span<const Jet2> x) {
        return x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
      };
      p.jets = ad::JetSpec{{0, 1}, {{0, 0}, {1, 1}}};
      break;
    case PinnKind::AllenCahn:
      p.lower = {0.0, -1.0};
      p.upper = {1.0, 1.0};
      p.boundary.extension = [](std::span<const Jet2> x) { return x[1] * x[1] * ad::cos(pi * x[1]); };
      p.boundary.length_factor = time_space_length;
      p.jets = ad::JetSpec{{0, 1}, {{1, 1}}};
      break;
  }
  p.collocation = hammersley_interior(collocation_count, 2, p.lower, p.upper);
  return p;
}

PinnObjective::PinnObjective(const PinnProblem& problem, const NetworkSpec& spec, Index chunk)
    : problem_(problem), spec_(spec), layout_(spec) {
  spec_.validate();
  if (spec_.input_width() != problem_.dim() || spec_.output_width() != 1) {
    throw Error("network must map " + std::to_string(problem_.dim()) + " inputs to 1 output");
  }
  if (chunk < 1) throw Error("chunk size must be positive");
  const Index n = problem_.collocation.rows();
  if (n == 0) throw Error("empty collocation set");
  inv_count_ = 1.0 / static_cast<double>(n);
  for (Index begin = 0; begin < n; begin += chunk) {
    const Index len = std::min(chunk, n - begin);
    Chunk c;
    c.points = problem_.collocation.middleRows(begin, len);
    c.bc = boundary_jets(problem_.boundary, c.points, problem_.jets);
    chunks_.push_back(std::move(c));
  }
}

ad::Var pinn_residual_batch(ad::Tape& tape, const PinnProblem& problem, const ParamLayout& layout,
                            const Matrix& points, const BoundaryJets& bc) {
  const ad::JetVar raw = forward_jet(tape, layout.layers(), points, problem.jets);
  return problem.residual(wrap_exact_bc(tape, bc, raw));
}

ad::Var pinn_solution_batch(ad::Tape& tape, const ParamLayout& layout, const Matrix& points,
                            const BoundaryJets& bc) {
  const ad::JetVar raw = forward_jet(tape, layout.layers(), points, ad::JetSpec{});
  return wrap_exact_bc(tape, bc, raw).value;
}

ad::Var PinnObjective::chunk_residual(ad::Tape& tape, const Chunk& c) const {
  return pinn_residual_batch(tape, problem_, layout_, c.points, c.bc);
}

ad::Var PinnObjective::chunk_loss(ad::Tape& tape, std::size_t chunk) const {
  const ad::Var r = chunk_residual(tape, chunks_.at(chunk));
  return tape.scale(tape.sum(tape.square(r)), inv_count_);
}

double PinnObjective::value(const Vector& theta) const {
  if (theta.size() != size()) throw Error("parameter vector has the wrong length");
  double loss = 0.0;
  for (std::size_t k = 0; k < chunks_.size(); ++k) {
    loss += ad::evaluate([&](ad::Tape& t) { return chunk_loss(t, k); }, theta);
  }
  return loss;
}

Evaluation PinnObjective::evaluate(const Vector& theta, const std::vector<char>* active) const {
  if (theta.size() != size()) throw Error("parameter vector has the wrong length");
  Evaluation out;
  out.grad = Vector::Zero(size());
  for (std::size_t k = 0; k < chunks_.size(); ++k) {
    const auto vg = ad::reverse_grad([&](ad::Tape& t) { return chunk_loss(t, k); }, theta, active);
    out.loss += vg.loss;
    out.grad += vg.grad;
  }
  return out;
}

Vector PinnObjective::residuals(const Vector& theta) const {
  Vector r(problem_.collocation.rows());
  Index at = 0;
  ad::Tape tape;
  for (const Chunk& c : chunks_) {
    tape.reset(theta);
    const ad::Var v = chunk_residual(tape, c);
    r.segment(at, v.rows()) = Eigen::Map<const Vector>(v.value().data(), v.rows());
    at += v.rows();
  }
  return r;
}

double pinn_loss(const PinnProblem& problem, const NetworkSpec& spec, const Vector& theta) {
  const PinnObjective obj(problem, spec);
  try {
    return obj.value(theta);
  } catch (const NonFiniteError&) {
    const Matrix& pts = problem.collocation;
    for (Index i = 0; i < pts.rows(); ++i) {
      const std::array<double, 2> x{pts(i, 0), pts(i, 1)};
      double r = 0.0;
      try {
        const Jet2 raw = jet_eval(spec, theta, x, {0, 1}, 2);
        r = problem.residual(wrap_exact_bc(problem.boundary, raw, x));
      } catch (const NonFiniteError&) {
        r = std::numeric_limits<double>::quiet_NaN();
      }
      if (!std::isfinite(r)) {
        throw Error("non-finite residual at collocation point " + std::to_string(i) + " (" +
                    std::to_string(x[0]) + ", " + std::to_string(x[1]) + ")");
      }
    }
    throw;
  }
}

Vector pinn_predict(const PinnProblem& problem, const NetworkSpec& spec, const Vector& theta,
                    const Matrix& points) {
  if (points.cols() != problem.dim()) throw Error("prediction points have the wrong dimension");
  const Matrix raw = forward(spec, theta, points);
  Vector out(points.rows());
  for (Index i = 0; i < points.rows(); ++i) {
    const std::span<const double> x(points.row(i).data(), static_cast<std::size_t>(points.cols()));
    out(i) = wrap_exact_bc(problem.boundary, raw(i, 0), x);
  }
  return out;
}

}  // namespace tlas
