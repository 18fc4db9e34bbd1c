#pragma once

#include "tlas/network/boundary.hpp"
#include "tlas/network/network.hpp"
#include "tlas/optimizer/objective.hpp"

#include <array>
#include <numbers>
#include <string>
#include <vector>

namespace tlas {

enum class PinnKind { Burgers, DiffusionAdvection, AllenCahn };

PinnKind parse_pinn_kind(const std::string& name);
const char* to_string(PinnKind kind);

struct PinnConstants {
  double nu = 0.01 / std::numbers::pi;  // Burgers viscosity
  double mu = 1e-2;                     // diffusion-advection diffusivity
  std::array<double, 2> b{1.0, 1.0};    // advection velocity
  double f = 1.0;                       // diffusion-advection source
  double diffusion = 1e-3;              // Allen-Cahn D
};

namespace detail {
inline double jet_value(const ad::Jet2& u) { return u.value(); }
inline ad::Var jet_value(const ad::JetVar& u) { return u.value; }
}  // namespace detail

/// u_t + u u_x - nu u_xx over coordinates (t, x).
template <class J>
auto burgers_residual(const J& u, double nu = PinnConstants{}.nu) {
  return u.d1(0) + detail::jet_value(u) * u.d1(1) - nu * u.d2(1, 1);
}

/// -mu (u_11 + u_22) + b . grad u - f over coordinates (x1, x2).
template <class J>
auto da_residual(const J& u, double mu = PinnConstants{}.mu, std::array<double, 2> b = PinnConstants{}.b,
                 double f = PinnConstants{}.f) {
  return -mu * (u.d2(0, 0) + u.d2(1, 1)) + b[0] * u.d1(0) + b[1] * u.d1(1) - f;
}

/// u_t - D u_xx - 5 (u - u^3) over coordinates (t, x).
template <class J>
auto ac_residual(const J& u, double diffusion = PinnConstants{}.diffusion) {
  const auto v = detail::jet_value(u);
  return u.d1(0) - diffusion * u.d2(1, 1) - 5.0 * (v - v * v * v);
}

/// A PINN benchmark: domain box, exact boundary wrapper, residual and the
/// interior collocation set. Coordinates are (t, x) for Burgers and
/// Allen-Cahn and (x1, x2) for diffusion-advection.
struct PinnProblem {
  PinnKind kind = PinnKind::Burgers;
  std::vector<double> lower, upper;
  BoundaryWrapper boundary;
  ad::JetSpec jets;
  PinnConstants constants;
  Matrix collocation;

  Index dim() const { return static_cast<Index>(lower.size()); }
  double residual(const ad::Jet2& u) const;
  ad::Var residual(const ad::JetVar& u) const;
};

PinnProblem make_pinn_problem(PinnKind kind, Index collocation_count = 10000,
                              const PinnConstants& constants = {});

/// Residuals r(u~) at a batch of points, one row per point; `bc` holds the
/// boundary jets of the same points.
ad::Var pinn_residual_batch(ad::Tape& tape, const PinnProblem& problem, const ParamLayout& layout,
                            const Matrix& points, const BoundaryJets& bc);
/// Wrapped prediction u~ at a batch of points, recorded on the tape.
ad::Var pinn_solution_batch(ad::Tape& tape, const ParamLayout& layout, const Matrix& points,
                            const BoundaryJets& bc);

/// Mean squared residual over the collocation set, evaluated in chunks of
/// points and summed in chunk order.
class PinnObjective : public Objective {
 public:
  PinnObjective(const PinnProblem& problem, const NetworkSpec& spec, Index chunk = 512);

  Index size() const override { return layout_.size(); }
  double value(const Vector& theta) const override;
  Evaluation evaluate(const Vector& theta, const std::vector<char>* active = nullptr) const override;

  const PinnProblem& problem() const { return problem_; }
  const NetworkSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }

  /// Residual of every collocation point, in collocation order.
  Vector residuals(const Vector& theta) const;
  /// Loss closure of one chunk (already divided by the total point count).
  ad::Var chunk_loss(ad::Tape& tape, std::size_t chunk) const;
  std::size_t chunk_count() const { return chunks_.size(); }

 private:
  struct Chunk {
    Matrix points;
    BoundaryJets bc;
  };
  ad::Var chunk_residual(ad::Tape& tape, const Chunk& c) const;

  PinnProblem problem_;
  NetworkSpec spec_;
  ParamLayout layout_;
  std::vector<Chunk> chunks_;
  double inv_count_ = 0.0;
};

/// Loss at theta; a non-finite residual raises an Error naming the point.
double pinn_loss(const PinnProblem& problem, const NetworkSpec& spec, const Vector& theta);

/// Wrapped network prediction u~ at each row of `points`.
Vector pinn_predict(const PinnProblem& problem, const NetworkSpec& spec, const Vector& theta,
                    const Matrix& points);

}  // namespace tlas
