#include "tlas/network/network.hpp"

#include <cmath>
#include <random>

namespace tlas {

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "linear") return Activation::Linear;
  throw Error("unknown activation '" + std::string(name) + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Linear: return "linear";
  }
  return "?";
}

NetworkSpec NetworkSpec::mlp(std::vector<Index> widths, Activation hidden, bool adaptive_slope, bool skip) {
  NetworkSpec spec;
  spec.widths = std::move(widths);
  spec.hidden = hidden;
  spec.adaptive_slope = adaptive_slope;
  spec.skip = skip;
  spec.validate();
  return spec;
}

void NetworkSpec::validate() const {
  if (widths.size() < 2) throw Error("network needs at least an input and an output width");
  for (Index w : widths) {
    if (w <= 0) throw Error("network widths must be positive");
  }
}

ParamLayout::ParamLayout(const NetworkSpec& spec) { append(spec); }

ParamLayout ParamLayout::stack(const std::vector<NetworkSpec>& specs) {
  ParamLayout layout;
  for (const auto& s : specs) layout.append(s);
  return layout;
}

void ParamLayout::append(const NetworkSpec& spec) {
  spec.validate();
  const Index count = spec.layer_count();
  for (Index h = 0; h < count; ++h) {
    const bool hidden = h + 1 < count;
    LayerBlock block;
    block.in = spec.widths[static_cast<std::size_t>(h)];
    block.out = spec.widths[static_cast<std::size_t>(h + 1)];
    block.begin = size_;
    block.weight_offset = size_;
    block.bias_offset = size_ + block.in * block.out;
    Index end = block.bias_offset + block.out;
    if (hidden && spec.adaptive_slope) {
      block.slope_offset = end;
      ++end;
    }
    block.end = end;
    block.activation = hidden ? spec.hidden : spec.output;
    block.skip = hidden && spec.skip && block.in == block.out;
    size_ = end;
    layers_.push_back(block);
  }
  segments_.push_back(count);
}

Index ParamLayout::segment_begin(std::size_t segment) const {
  Index first = 0;
  for (std::size_t s = 0; s < segment; ++s) first += segments_.at(s);
  return first;
}

std::span<const LayerBlock> ParamLayout::segment_layers(std::size_t segment) const {
  const Index first = segment_begin(segment);
  return std::span<const LayerBlock>(layers_).subspan(static_cast<std::size_t>(first),
                                                      static_cast<std::size_t>(segments_.at(segment)));
}

std::vector<LayerParams> unflatten(const ParamLayout& layout, const Vector& theta) {
  if (theta.size() != layout.size()) throw Error("parameter vector does not match layout");
  std::vector<LayerParams> out;
  out.reserve(layout.layers().size());
  for (const auto& L : layout.layers()) {
    LayerParams p;
    p.weight = Eigen::Map<const Matrix>(theta.data() + L.weight_offset, L.in, L.out);
    p.bias = theta.segment(L.bias_offset, L.out);
    if (L.has_slope()) p.slope = theta[L.slope_offset];
    out.push_back(std::move(p));
  }
  return out;
}

Vector flatten(const ParamLayout& layout, const std::vector<LayerParams>& layers) {
  if (layers.size() != layout.layers().size()) throw Error("layer count does not match layout");
  Vector theta(layout.size());
  for (std::size_t h = 0; h < layers.size(); ++h) {
    const auto& L = layout.layers()[h];
    const auto& p = layers[h];
    if (p.weight.rows() != L.in || p.weight.cols() != L.out || p.bias.size() != L.out ||
        p.slope.has_value() != L.has_slope()) {
      throw Error("layer " + std::to_string(h) + " does not match layout");
    }
    Eigen::Map<Matrix>(theta.data() + L.weight_offset, L.in, L.out) = p.weight;
    theta.segment(L.bias_offset, L.out) = p.bias;
    if (L.has_slope()) theta[L.slope_offset] = *p.slope;
  }
  return theta;
}

double xavier_bound(Index fan_in, Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Vector init_xavier(const ParamLayout& layout, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vector theta = Vector::Zero(layout.size());
  for (const auto& L : layout.layers()) {
    const double bound = xavier_bound(L.in, L.out);
    for (Index k = 0; k < L.in * L.out; ++k) {
      // 53 random mantissa bits; avoids the implementation-defined
      // uniform_real_distribution so streams agree across standard libraries.
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      theta[L.weight_offset + k] = -bound + 2.0 * bound * u;
    }
    if (L.has_slope()) theta[L.slope_offset] = 1.0;
  }
  return theta;
}

FlatParams init_xavier(const NetworkSpec& spec, std::uint64_t seed) {
  ParamLayout layout(spec);
  Vector values = init_xavier(layout, seed);
  return FlatParams{std::move(layout), std::move(values)};
}

Matrix forward(std::span<const LayerBlock> layers, const Vector& theta, const Matrix& x) {
  Matrix h = x;
  for (const auto& L : layers) {
    if (h.cols() != L.in) throw Error("forward: input width does not match layer");
    Eigen::Map<const Matrix> W(theta.data() + L.weight_offset, L.in, L.out);
    Matrix z = h * W;
    z.rowwise() += theta.segment(L.bias_offset, L.out).transpose();
    if (L.has_slope()) z *= theta[L.slope_offset];
    switch (L.activation) {
      case Activation::Tanh:
        z = z.array().tanh();
        break;
      case Activation::Relu:
        z = z.array().max(0.0);
        break;
      case Activation::Linear:
        break;
    }
    if (L.skip) z += h;
    h = std::move(z);
  }
  return h;
}

Matrix forward(const NetworkSpec& spec, const Vector& theta, const Matrix& x) {
  ParamLayout layout(spec);
  if (theta.size() != layout.size()) throw Error("forward: parameter vector does not match network");
  return forward(layout.layers(), theta, x);
}

namespace {

using ad::JetVar;
using ad::Tape;
using ad::Var;

Var mul_opt(Tape& t, Var a, Var b) { return (a.valid() && b.valid()) ? t.mul(a, b) : Var{}; }

Var add_opt(Tape& t, Var a, Var b) {
  if (!a.valid()) return b;
  if (!b.valid()) return a;
  return t.add(a, b);
}

JetVar apply_layer(Tape& t, const LayerBlock& L, const JetVar& x) {
  const Var W = t.param(L.weight_offset, L.in, L.out);
  const Var b = t.param(L.bias_offset, 1, L.out);

  JetVar z;
  z.spec = x.spec;
  z.value = t.add(t.matmul(x.value, W), b);
  z.first.resize(x.first.size());
  z.second.resize(x.second.size());
  for (std::size_t k = 0; k < x.first.size(); ++k) {
    if (x.first[k].valid()) z.first[k] = t.matmul(x.first[k], W);
  }
  for (std::size_t k = 0; k < x.second.size(); ++k) {
    if (x.second[k].valid()) z.second[k] = t.matmul(x.second[k], W);
  }

  if (L.has_slope()) {
    const Var a = t.param(L.slope_offset, 1, 1);
    z.value = t.mul(z.value, a);
    for (auto& v : z.first) v = mul_opt(t, v, a);
    for (auto& v : z.second) v = mul_opt(t, v, a);
  }

  JetVar out;
  out.spec = x.spec;
  out.first.resize(z.first.size());
  out.second.resize(z.second.size());
  switch (L.activation) {
    case Activation::Linear:
      out = z;
      break;
    case Activation::Tanh: {
      out.value = t.tanh(z.value);
      if (z.spec.empty()) break;
      const Var d1 = 1.0 - t.square(out.value);
      for (std::size_t k = 0; k < z.first.size(); ++k) out.first[k] = mul_opt(t, d1, z.first[k]);
      if (!z.second.empty()) {
        const Var d2 = -2.0 * t.mul(out.value, d1);
        for (std::size_t k = 0; k < z.second.size(); ++k) {
          const auto [i, j] = z.spec.second[k];
          const Var zi = z.first[static_cast<std::size_t>(z.spec.first_slot(i))];
          const Var zj = z.first[static_cast<std::size_t>(z.spec.first_slot(j))];
          const Var curvature = mul_opt(t, d2, mul_opt(t, zi, zj));
          out.second[k] = add_opt(t, curvature, mul_opt(t, d1, z.second[k]));
        }
      }
      break;
    }
    case Activation::Relu: {
      out.value = t.relu(z.value);
      if (!z.spec.second.empty()) throw Error("second input derivatives through a ReLU layer are undefined");
      if (z.spec.empty()) break;
      const Var mask = t.step(z.value);
      for (std::size_t k = 0; k < z.first.size(); ++k) out.first[k] = mul_opt(t, mask, z.first[k]);
      break;
    }
  }

  if (L.skip) {
    out.value = t.add(out.value, x.value);
    for (std::size_t k = 0; k < out.first.size(); ++k) out.first[k] = add_opt(t, out.first[k], x.first[k]);
    for (std::size_t k = 0; k < out.second.size(); ++k) out.second[k] = add_opt(t, out.second[k], x.second[k]);
  }
  return out;
}

void check_spec(const ad::JetSpec& spec, Index dim) {
  for (int c : spec.first) {
    if (c < 0 || c >= dim || c >= ad::Jet2::kMaxDim) throw Error("jet coordinate outside the input dimension");
  }
  for (auto [i, j] : spec.second) {
    if (spec.first_slot(i) < 0 || spec.first_slot(j) < 0) {
      throw Error("second derivative requested without the matching first derivatives");
    }
  }
}

}  // namespace

ad::JetVar forward_jet(ad::Tape& tape, std::span<const LayerBlock> layers, const Matrix& x, const ad::JetSpec& spec) {
  check_spec(spec, x.cols());
  if (!spec.second.empty()) {
    for (const auto& L : layers) {
      if (L.activation == Activation::Relu) throw Error("second input derivatives through a ReLU layer are undefined");
    }
  }
  JetVar h;
  h.spec = spec;
  h.value = tape.constant(x);
  h.first.resize(spec.first.size());
  h.second.resize(spec.second.size());
  for (std::size_t k = 0; k < spec.first.size(); ++k) {
    Matrix seed = Matrix::Zero(x.rows(), x.cols());
    seed.col(spec.first[k]).setOnes();
    h.first[k] = tape.constant(seed);
  }
  for (const auto& L : layers) {
    if (h.value.cols() != L.in) throw Error("forward: input width does not match layer");
    h = apply_layer(tape, L, h);
  }
  h.materialize();
  return h;
}

ad::Var forward_tape(ad::Tape& tape, std::span<const LayerBlock> layers, ad::Var x) {
  JetVar h;
  h.value = x;
  for (const auto& L : layers) {
    if (h.value.cols() != L.in) throw Error("forward: input width does not match layer");
    h = apply_layer(tape, L, h);
  }
  return h.value;
}

ad::Jet2 jet_eval(const NetworkSpec& spec, const Vector& theta, std::span<const double> x,
                  const std::vector<int>& wrt, int order) {
  ParamLayout layout(spec);
  if (theta.size() != layout.size()) throw Error("jet_eval: parameter vector does not match network");
  if (static_cast<Index>(x.size()) != spec.input_width()) throw Error("jet_eval: point has wrong dimension");
  const ad::JetSpec jspec = ad::JetSpec::full(wrt, order);

  Matrix point(1, static_cast<Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) point(0, static_cast<Index>(i)) = x[i];
  ad::Tape tape;
  tape.reset(theta);
  const ad::JetVar out = forward_jet(tape, layout.layers(), point, jspec);

  // Rebuild a Jet2 carrying exactly the requested entries.
  ad::Jet2 result = ad::Jet2::constant(out.value.value()(0, 0));
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    const int c = wrt[k];
    ad::Jet2 dir = ad::Jet2::variable(0.0, c, order == 2);
    result += dir * out.first[k].value()(0, 0);
  }
  if (order == 2) {
    for (std::size_t k = 0; k < jspec.second.size(); ++k) {
      const auto [i, j] = jspec.second[k];
      const double h = out.second[k].value()(0, 0);
      ad::Jet2 xi = ad::Jet2::variable(0.0, i, true);
      ad::Jet2 xj = ad::Jet2::variable(0.0, j, true);
      // xi*xj contributes 1 to (i,j) and (j,i), or 2 to (i,i).
      result += (xi * xj) * (i == j ? 0.5 * h : h);
    }
  }
  return result;
}

}  // namespace tlas
