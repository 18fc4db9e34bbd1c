#include "tlas/network/deeponet.hpp"

#include <cmath>

namespace tlas {

void DonSpec::validate() const {
  branch.validate();
  if (trunk.has_value() == has_pod_trunk()) throw Error("DeepONet needs exactly one trunk: a network or a POD basis");
  if (branch.output_width() != latent) throw Error("branch output width differs from the latent dimension");
  if (trunk) {
    trunk->validate();
    if (trunk->output_width() != latent) throw Error("trunk output width differs from the latent dimension");
  } else if (pod->latent() != latent) {
    throw Error("POD basis size differs from the latent dimension");
  }
}

ParamLayout DonSpec::layout() const {
  validate();
  if (trunk) return ParamLayout::stack({branch, *trunk});
  return ParamLayout::stack({branch});
}

namespace {

Index pod_row(const PodBasis& pod, std::span<const double> xi) {
  if (static_cast<Index>(xi.size()) != pod.points.cols()) throw Error("coordinate dimension differs from the POD grid");
  for (Index r = 0; r < pod.points.rows(); ++r) {
    bool same = true;
    for (Index c = 0; c < pod.points.cols() && same; ++c) {
      same = std::abs(pod.points(r, c) - xi[static_cast<std::size_t>(c)]) <= 1e-12;
    }
    if (same) return r;
  }
  throw Error("coordinate is not a node of the POD grid");
}

void check_pod_grid(const PodBasis& pod, const Matrix& xi) {
  if (xi.rows() != pod.points.rows() || xi.cols() != pod.points.cols() ||
      !((xi - pod.points).array().abs() <= 1e-12).all()) {
    throw Error("POD trunk requires the basis grid as coordinates");
  }
}

}  // namespace

double don_eval(const DonSpec& spec, const Vector& theta, std::span<const double> y, std::span<const double> xi) {
  const ParamLayout layout = spec.layout();
  if (theta.size() != layout.size()) throw Error("parameter vector does not match the DeepONet");
  if (static_cast<Index>(y.size()) != spec.branch.input_width()) throw Error("input function has wrong sensor count");
  Matrix ym(1, static_cast<Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) ym(0, static_cast<Index>(i)) = y[i];
  const Matrix b = forward(layout.segment_layers(0), theta, ym);
  if (spec.pod) {
    const Index r = pod_row(*spec.pod, xi);
    return b.row(0).dot(spec.pod->basis.row(r)) + spec.pod->mean[r];
  }
  Matrix xm(1, static_cast<Index>(xi.size()));
  for (std::size_t i = 0; i < xi.size(); ++i) xm(0, static_cast<Index>(i)) = xi[i];
  const Matrix t = forward(layout.segment_layers(1), theta, xm);
  return b.row(0).dot(t.row(0));
}

Matrix don_predict(const DonSpec& spec, const Vector& theta, const Matrix& y, const Matrix& xi) {
  const ParamLayout layout = spec.layout();
  if (theta.size() != layout.size()) throw Error("parameter vector does not match the DeepONet");
  const Matrix b = forward(layout.segment_layers(0), theta, y);
  if (spec.pod) {
    check_pod_grid(*spec.pod, xi);
    Matrix g = b * spec.pod->basis.transpose();
    g.rowwise() += spec.pod->mean.transpose();
    return g;
  }
  const Matrix t = forward(layout.segment_layers(1), theta, xi);
  return b * t.transpose();
}

ad::Var don_predict_tape(ad::Tape& tape, const DonSpec& spec, const ParamLayout& layout, const Matrix& y,
                         const Matrix& xi) {
  const ad::Var b = forward_tape(tape, layout.segment_layers(0), tape.constant(y));
  if (spec.pod) {
    check_pod_grid(*spec.pod, xi);
    const ad::Var g = tape.matmul(b, tape.constant(spec.pod->basis.transpose()));
    return tape.add(g, tape.constant(Matrix(spec.pod->mean.transpose())));
  }
  const ad::Var t = forward_tape(tape, layout.segment_layers(1), tape.constant(xi));
  return tape.matmul(b, tape.transpose(t));
}

}  // namespace tlas
