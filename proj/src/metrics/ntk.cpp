#include "tlas/metrics/ntk.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace tlas {

namespace {

constexpr Index kMaxNtkRows = 512;

}  // namespace

NtkTarget parse_ntk_target(const std::string& name) {
  if (name == "residual") return NtkTarget::Residual;
  if (name == "solution") return NtkTarget::Solution;
  throw Error("unknown NTK target '" + name + "' (expected residual or solution)");
}

Matrix output_jacobian(const OutputClosure& outputs, const Vector& theta) {
  ad::Tape tape;
  tape.reset(theta);
  const ad::Var out = outputs(tape);
  if (out.cols() != 1) throw Error("NTK outputs must form a single column");
  const Index rows = out.rows();
  Matrix J(rows, theta.size());
  Matrix seed = Matrix::Zero(rows, 1);
  Vector g(theta.size());
  for (Index i = 0; i < rows; ++i) {
    seed(i, 0) = 1.0;
    g.setZero();
    tape.backward(out, seed, g);
    J.row(i) = g.transpose();
    seed(i, 0) = 0.0;
  }
  return J;
}

Matrix ntk_kernel(const Matrix& jacobian, const std::vector<Index>& columns) {
  if (columns.empty()) return jacobian * jacobian.transpose();
  Matrix sub(jacobian.rows(), static_cast<Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) sub.col(static_cast<Index>(k)) = jacobian.col(columns[k]);
  return sub * sub.transpose();
}

Conditioning condition_number(const Matrix& kernel) {
  if (kernel.rows() == 0 || kernel.rows() != kernel.cols()) throw Error("kernel must be a non-empty square matrix");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(kernel);
  const Vector s = svd.singularValues();
  const double smax = s.maxCoeff();
  const double smin = s.minCoeff();
  if (!(smax > 0.0) || smin <= 1e-14 * smax) return Conditioning{std::numeric_limits<double>::infinity(), true};
  return Conditioning{smax / smin, false};
}

NtkReport ntk_report(const Matrix& jacobian, const ParamLayout& layout) {
  if (jacobian.cols() != layout.size()) throw Error("Jacobian width does not match the parameter layout");
  NtkReport r;
  r.dimension = jacobian.rows();
  r.kernel = ntk_kernel(jacobian);
  const Conditioning c = condition_number(r.kernel);
  r.log10_condition = std::log10(c.value);
  r.singular = c.singular;
  for (const auto& L : layout.layers()) {
    std::vector<Index> cols;
    for (Index j = L.begin; j < L.end; ++j) cols.push_back(j);
    const Conditioning cl = condition_number(ntk_kernel(jacobian, cols));
    r.layer_log10_condition.push_back(std::log10(cl.value));
    r.layer_singular.push_back(cl.singular ? 1 : 0);
  }
  return r;
}

NtkReport ntk_condition(const PinnProblem& problem, const NetworkSpec& spec, const Vector& theta,
                        const Matrix& points, NtkTarget target) {
  if (points.rows() < 1 || points.rows() > kMaxNtkRows) throw Error("NTK needs between 1 and 512 sample points");
  const ParamLayout layout(spec);
  if (theta.size() != layout.size()) throw Error("parameter vector has the wrong length");
  const ad::JetSpec jets = target == NtkTarget::Residual ? problem.jets : ad::JetSpec{};
  const BoundaryJets bc = boundary_jets(problem.boundary, points, jets);
  const Matrix J = output_jacobian(
      [&](ad::Tape& t) {
        return target == NtkTarget::Residual ? pinn_residual_batch(t, problem, layout, points, bc)
                                             : pinn_solution_batch(t, layout, points, bc);
      },
      theta);
  return ntk_report(J, layout);
}

NtkReport ntk_condition(const DonSpec& spec, const Vector& theta, const Matrix& y, const Matrix& xi) {
  if (y.rows() * xi.rows() > kMaxNtkRows) throw Error("NTK needs at most 512 (sample, point) pairs");
  const ParamLayout layout = spec.layout();
  if (theta.size() != layout.size()) throw Error("parameter vector has the wrong length");
  const Matrix J = output_jacobian(
      [&](ad::Tape& t) {
        // flatten the n_s x n_c predictions row by row into one column
        const ad::Var pred = don_predict_tape(t, spec, layout, y, xi);
        const Index ns = y.rows(), nc = xi.rows();
        std::vector<Index> rep(static_cast<std::size_t>(ns * nc));
        for (Index i = 0; i < ns * nc; ++i) rep[static_cast<std::size_t>(i)] = i / nc;
        // row (j, k) of the gathered matrix is prediction row j; mask out all but column k
        Matrix mask = Matrix::Zero(ns * nc, nc);
        for (Index i = 0; i < ns * nc; ++i) mask(i, i % nc) = 1.0;
        const ad::Var rows = t.gather_rows(pred, std::move(rep));
        return t.row_sum(t.mul(rows, t.constant(std::move(mask))));
      },
      theta);
  return ntk_report(J, layout);
}

}  // namespace tlas
