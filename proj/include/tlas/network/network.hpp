#pragma once

#include "tlas/autodiff/jet.hpp"
#include "tlas/autodiff/tape.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tlas {

enum class Activation { Tanh, Relu, Linear };

Activation parse_activation(std::string_view name);
std::string to_string(Activation a);

/// Fully connected architecture. Hidden layers use `hidden`, the last layer
/// uses `output`. With `adaptive_slope` every hidden layer computes
/// sigma(a_h * z) with one trainable a_h; with `skip` every hidden layer whose
/// input and output widths agree adds its input to its output.
struct NetworkSpec {
  std::vector<Index> widths;
  Activation hidden = Activation::Tanh;
  Activation output = Activation::Linear;
  bool adaptive_slope = false;
  bool skip = false;

  static NetworkSpec mlp(std::vector<Index> widths, Activation hidden = Activation::Tanh,
                         bool adaptive_slope = false, bool skip = false);

  Index layer_count() const { return static_cast<Index>(widths.size()) - 1; }
  Index input_width() const { return widths.front(); }
  Index output_width() const { return widths.back(); }
  void validate() const;
};

/// Parameter block of one layer inside the flat vector. The weight is stored
/// row-major as an (in x out) matrix so that a layer computes X * W + b.
struct LayerBlock {
  Index in = 0;
  Index out = 0;
  Index begin = 0;
  Index weight_offset = 0;
  Index bias_offset = 0;
  Index slope_offset = -1;
  Index end = 0;
  Activation activation = Activation::Linear;
  bool skip = false;

  Index size() const { return end - begin; }
  bool has_slope() const { return slope_offset >= 0; }
};

/// Offset table of a flat parameter vector built from one or more stacked
/// networks. Each stacked network is a "segment" (a DeepONet has a branch
/// segment and optionally a trunk segment).
class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(const NetworkSpec& spec);
  static ParamLayout stack(const std::vector<NetworkSpec>& specs);

  const std::vector<LayerBlock>& layers() const { return layers_; }
  const LayerBlock& layer(Index h) const { return layers_.at(static_cast<std::size_t>(h)); }
  Index layer_count() const { return static_cast<Index>(layers_.size()); }
  Index size() const { return size_; }
  /// Number of layers in each stacked network, in stacking order.
  const std::vector<Index>& segments() const { return segments_; }
  Index segment_begin(std::size_t segment) const;
  std::span<const LayerBlock> segment_layers(std::size_t segment) const;

 private:
  void append(const NetworkSpec& spec);

  std::vector<LayerBlock> layers_;
  std::vector<Index> segments_;
  Index size_ = 0;
};

/// The global parameter vector together with its layout.
struct FlatParams {
  ParamLayout layout;
  Vector values;
};

struct LayerParams {
  Matrix weight;
  Vector bias;
  std::optional<double> slope;
};

std::vector<LayerParams> unflatten(const ParamLayout& layout, const Vector& theta);
Vector flatten(const ParamLayout& layout, const std::vector<LayerParams>& layers);

/// Xavier-uniform weights, zero biases, unit slopes; deterministic per seed.
FlatParams init_xavier(const NetworkSpec& spec, std::uint64_t seed);
Vector init_xavier(const ParamLayout& layout, std::uint64_t seed);
double xavier_bound(Index fan_in, Index fan_out);

/// Plain evaluation of the given layers on a batch (one row per point).
Matrix forward(std::span<const LayerBlock> layers, const Vector& theta, const Matrix& x);
Matrix forward(const NetworkSpec& spec, const Vector& theta, const Matrix& x);

/// Records the layers on `tape` propagating input jets described by `spec`.
/// Input point `x` has one row per point. Throws when second derivatives are
/// requested through a ReLU layer.
ad::JetVar forward_jet(ad::Tape& tape, std::span<const LayerBlock> layers, const Matrix& x,
                       const ad::JetSpec& spec);

/// Records the layers on `tape` for a value-only input.
ad::Var forward_tape(ad::Tape& tape, std::span<const LayerBlock> layers, ad::Var x);

/// Single-point jet of output 0 of a network: value, first derivatives for
/// `wrt`, and for order 2 all second derivatives over `wrt`.
ad::Jet2 jet_eval(const NetworkSpec& spec, const Vector& theta, std::span<const double> x,
                  const std::vector<int>& wrt, int order);

}  // namespace tlas
