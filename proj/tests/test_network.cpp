#include "doctest.h"

#include "tlas/network/boundary.hpp"
#include "tlas/network/deeponet.hpp"
#include "tlas/network/network.hpp"

#include <cmath>
#include <numbers>

using namespace tlas;
using tlas::ad::Jet2;

TEST_CASE("parameter count and layout offsets") {
  const auto spec = NetworkSpec::mlp({2, 20, 20, 1}, Activation::Tanh, true, true);
  const ParamLayout layout(spec);
  CHECK(layout.size() == (2 * 20 + 20 + 1) + (20 * 20 + 20 + 1) + (20 + 1));
  Index next = 0;
  for (const auto& L : layout.layers()) {
    CHECK(L.begin == next);
    next = L.end;
  }
  CHECK(next == layout.size());
  CHECK_FALSE(layout.layer(0).skip);
  CHECK(layout.layer(1).skip);
  CHECK_FALSE(layout.layer(2).has_slope());
}

TEST_CASE("xavier bound, determinism and mean") {
  CHECK(xavier_bound(3, 3) == 1.0);
  const auto spec = NetworkSpec::mlp({100, 100, 1});
  const auto a = init_xavier(spec, 7);
  const auto b = init_xavier(spec, 7);
  CHECK((a.values.array() == b.values.array()).all());
  const auto c = init_xavier(spec, 8);
  CHECK_FALSE((a.values.array() == c.values.array()).all());

  const auto& L = a.layout.layer(0);
  const Vector w = a.values.segment(L.weight_offset, L.in * L.out);
  const double bound = xavier_bound(100, 100);
  CHECK(w.cwiseAbs().maxCoeff() <= bound);
  // uniform law on [-b, b]: sd of the sample mean is b / sqrt(3 N)
  const double sigma = bound / std::sqrt(3.0 * static_cast<double>(w.size()));
  CHECK(std::abs(w.mean()) < 3.0 * sigma);
  CHECK(a.values.segment(L.bias_offset, L.out).isZero(0.0));
}

TEST_CASE("adaptive slopes start at one") {
  const auto p = init_xavier(NetworkSpec::mlp({2, 4, 4, 1}, Activation::Tanh, true), 1);
  for (const auto& L : p.layout.layers()) {
    if (L.has_slope()) CHECK(p.values[L.slope_offset] == 1.0);
  }
}

TEST_CASE("flatten and unflatten round-trip bit-exact") {
  const auto p = init_xavier(NetworkSpec::mlp({3, 5, 5, 2}, Activation::Tanh, true, true), 11);
  const Vector back = flatten(p.layout, unflatten(p.layout, p.values));
  CHECK((back.array() == p.values.array()).all());
}

TEST_CASE("zero network outputs zero and linear identity map") {
  const auto spec = NetworkSpec::mlp({2, 6, 6, 1});
  const Vector zero = Vector::Zero(ParamLayout(spec).size());
  Matrix x = Matrix::Random(5, 2);
  CHECK(forward(spec, zero, x).isZero(0.0));

  const auto lin = NetworkSpec::mlp({3, 3});
  ParamLayout layout(lin);
  std::vector<LayerParams> layers(1);
  layers[0].weight = Matrix::Identity(3, 3);
  layers[0].bias = Vector::Zero(3);
  Matrix y = Matrix::Random(4, 3);
  CHECK((forward(lin, flatten(layout, layers), y).array() == y.array()).all());
}

TEST_CASE("hand-computed FNN[2,3,1]") {
  const auto spec = NetworkSpec::mlp({2, 3, 1});
  std::vector<LayerParams> layers(2);
  layers[0].weight.resize(2, 3);
  layers[0].weight << 0.1, -0.2, 0.3, 0.4, 0.5, -0.6;
  layers[0].bias.resize(3);
  layers[0].bias << 0.05, -0.05, 0.0;
  layers[1].weight.resize(3, 1);
  layers[1].weight << 1.0, -1.0, 0.5;
  layers[1].bias.resize(1);
  layers[1].bias << 0.2;
  const Vector theta = flatten(ParamLayout(spec), layers);
  Matrix x(1, 2);
  x << 0.5, -1.0;
  const double h0 = std::tanh(0.1 * 0.5 + 0.4 * -1.0 + 0.05);
  const double h1 = std::tanh(-0.2 * 0.5 + 0.5 * -1.0 - 0.05);
  const double h2 = std::tanh(0.3 * 0.5 - 0.6 * -1.0);
  CHECK(forward(spec, theta, x)(0, 0) == doctest::Approx(h0 - h1 + 0.5 * h2 + 0.2).epsilon(1e-15));
}

TEST_CASE("forward rejects mismatched shapes") {
  const auto spec = NetworkSpec::mlp({2, 3, 1});
  const auto p = init_xavier(spec, 1);
  CHECK_THROWS_AS(forward(spec, p.values, Matrix::Zero(2, 3)), Error);
  CHECK_THROWS_AS(forward(spec, Vector::Zero(4), Matrix::Zero(2, 2)), Error);
}

namespace {

// Independent plain MLP: loops over neurons, no Eigen products.
double reference_mlp(const std::vector<LayerParams>& layers, std::vector<double> h) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& p = layers[l];
    std::vector<double> z(static_cast<std::size_t>(p.weight.cols()));
    for (Index j = 0; j < p.weight.cols(); ++j) {
      double acc = p.bias[j];
      for (Index i = 0; i < p.weight.rows(); ++i) acc += h[static_cast<std::size_t>(i)] * p.weight(i, j);
      z[static_cast<std::size_t>(j)] = l + 1 < layers.size() ? std::tanh(acc) : acc;
    }
    h = std::move(z);
  }
  return h[0];
}

}  // namespace

TEST_CASE("unit slopes without skips reduce to the plain MLP") {
  const auto adaptive = NetworkSpec::mlp({2, 7, 7, 1}, Activation::Tanh, true, false);
  const auto p = init_xavier(adaptive, 4);
  const auto layers = unflatten(p.layout, p.values);
  Matrix x = Matrix::Random(6, 2);
  const Matrix out = forward(adaptive, p.values, x);
  for (Index r = 0; r < x.rows(); ++r) {
    CHECK(out(r, 0) == doctest::Approx(reference_mlp(layers, {x(r, 0), x(r, 1)})).epsilon(1e-14));
  }
}

TEST_CASE("tape forward equals plain forward bitwise") {
  const auto spec = NetworkSpec::mlp({3, 8, 8, 8, 2}, Activation::Tanh, true, true);
  const auto p = init_xavier(spec, 9);
  Matrix x = Matrix::Random(10, 3);
  ad::Tape tape;
  tape.reset(p.values);
  const ad::Var u = forward_tape(tape, p.layout.layers(), tape.constant(x));
  CHECK((u.value().array() == forward(spec, p.values, x).array()).all());
  const auto jet = forward_jet(tape, p.layout.layers(), x, ad::JetSpec::full({0, 2}, 2));
  CHECK((jet.value.value().array() == u.value().array()).all());
}

namespace {

BoundaryWrapper burgers_like() {
  BoundaryWrapper w;
  w.extension = [](std::span<const Jet2> x) { return -ad::sin(std::numbers::pi * x[1]); };
  w.length_factor = [](std::span<const Jet2> x) { return x[0] * (x[1] + 1.0) * (x[1] - 1.0); };
  return w;
}

}  // namespace

TEST_CASE("boundary wrapper reproduces boundary data for every parameter vector") {
  const auto w = burgers_like();
  const auto spec = NetworkSpec::mlp({2, 6, 1});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = init_xavier(spec, seed);
    for (double x : {-1.0, -0.3, 0.0, 0.8, 1.0}) {
      const double pt[2] = {0.0, x};
      Matrix m(1, 2);
      m << 0.0, x;
      const double raw = forward(spec, p.values, m)(0, 0);
      CHECK(wrap_exact_bc(w, raw, pt) == -std::sin(std::numbers::pi * x));
    }
    for (double t : {0.2, 0.7}) {
      for (double x : {-1.0, 1.0}) {
        const double pt[2] = {t, x};
        CHECK(std::abs(wrap_exact_bc(w, 3.7, pt) + std::sin(std::numbers::pi * x)) < 1e-15);
      }
    }
  }
}

TEST_CASE("box length factor at the centre") {
  BoundaryWrapper w;
  w.extension = [](std::span<const Jet2>) { return Jet2::constant(0.0); };
  w.length_factor = [](std::span<const Jet2> x) { return x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]); };
  const double c[2] = {0.5, 0.5};
  CHECK(w.length_factor_at(c) == 0.0625);
}

TEST_CASE("wrapped jets obey the product rule") {
  const auto w = burgers_like();
  const auto spec = NetworkSpec::mlp({2, 5, 1});
  const auto p = init_xavier(spec, 3);
  const double pt[2] = {0.4, 0.3};
  const Jet2 raw = jet_eval(spec, p.values, pt, {0, 1}, 2);
  const Jet2 u = wrap_exact_bc(w, raw, pt);

  auto wrapped = [&](double t, double x) {
    Matrix m(1, 2);
    m << t, x;
    const double q[2] = {t, x};
    return wrap_exact_bc(w, forward(spec, p.values, m)(0, 0), q);
  };
  const double h = 1e-4;
  const double ut = (wrapped(0.4 + h, 0.3) - wrapped(0.4 - h, 0.3)) / (2 * h);
  const double uxx = (wrapped(0.4, 0.3 + h) - 2 * wrapped(0.4, 0.3) + wrapped(0.4, 0.3 - h)) / (h * h);
  CHECK(u.d1(0) == doctest::Approx(ut).epsilon(1e-6));
  CHECK(u.d2(1, 1) == doctest::Approx(uxx).epsilon(1e-5));

  // batched wrap on a tape agrees with the scalar wrap
  Matrix pts(1, 2);
  pts << 0.4, 0.3;
  const auto jspec = ad::JetSpec{{0, 1}, {{1, 1}}};
  const auto bc = boundary_jets(w, pts, jspec);
  ad::Tape tape;
  tape.reset(p.values);
  const auto batch = wrap_exact_bc(tape, bc, forward_jet(tape, p.layout.layers(), pts, jspec));
  CHECK(batch.value.scalar() == doctest::Approx(u.value()).epsilon(1e-15));
  CHECK(batch.d1(0).scalar() == doctest::Approx(u.d1(0)).epsilon(1e-14));
  CHECK(batch.d1(1).scalar() == doctest::Approx(u.d1(1)).epsilon(1e-14));
  CHECK(batch.d2(1, 1).scalar() == doctest::Approx(u.d2(1, 1)).epsilon(1e-14));
}

namespace {

// Single linear layer with the given weights and no bias.
NetworkSpec linear_layer(Index in, Index out) { return NetworkSpec::mlp({in, out}); }

}  // namespace

TEST_CASE("DeepONet inner product") {
  DonSpec spec;
  spec.branch = linear_layer(1, 1);
  spec.trunk = linear_layer(1, 1);
  spec.latent = 1;
  Vector theta(4);
  theta << 2.0, 0.0, 3.0, 0.0;
  const double y = 1.0, xi = 1.0;
  CHECK(don_eval(spec, theta, std::span<const double>(&y, 1), std::span<const double>(&xi, 1)) == 6.0);

  DonSpec two;
  two.branch = linear_layer(2, 2);
  two.trunk = linear_layer(1, 2);
  two.latent = 2;
  const ParamLayout layout = two.layout();
  Vector p(layout.size());
  // branch W = [[1,2],[3,4]], b = (0.5,-0.5); trunk W = [[2,-1]], b = (0,1)
  p << 1, 2, 3, 4, 0.5, -0.5, 2, -1, 0, 1;
  const double yv[2] = {1.0, -1.0};
  const double x = 0.5;
  // B = (1-3+0.5, 2-4-0.5) = (-1.5,-2.5), T = (1, 0.5)
  CHECK(don_eval(two, p, yv, std::span<const double>(&x, 1)) == -1.5 * 1.0 + -2.5 * 0.5);
}

TEST_CASE("DeepONet is linear in the branch output") {
  DonSpec spec;
  spec.branch = NetworkSpec::mlp({4, 6, 3});
  spec.trunk = NetworkSpec::mlp({2, 6, 3});
  spec.latent = 3;
  const ParamLayout layout = spec.layout();
  Vector theta = init_xavier(layout, 5);
  const auto& last = layout.layer(1);
  Matrix y = Matrix::Random(3, 4);
  Matrix xi = Matrix::Random(5, 2);
  const Matrix g1 = don_predict(spec, theta, y, xi);
  // scaling the branch output layer scales the prediction
  Vector scaled = theta;
  scaled.segment(last.begin, last.size()) *= 2.5;
  const Matrix g2 = don_predict(spec, scaled, y, xi);
  CHECK((g2 - 2.5 * g1).norm() < 1e-12 * g1.norm());

  Vector zero_out = theta;
  zero_out.segment(last.begin, last.size()).setZero();
  CHECK(don_predict(spec, zero_out, y, xi).isZero(0.0));

  const double yy[4] = {y(1, 0), y(1, 1), y(1, 2), y(1, 3)};
  const double xx[2] = {xi(2, 0), xi(2, 1)};
  CHECK(don_eval(spec, theta, yy, xx) == doctest::Approx(g1(1, 2)).epsilon(1e-14));
}

TEST_CASE("DeepONet latent mismatch is an error") {
  DonSpec spec;
  spec.branch = NetworkSpec::mlp({4, 3});
  spec.trunk = NetworkSpec::mlp({2, 2});
  spec.latent = 3;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("POD trunk uses basis rows plus the mean") {
  auto pod = std::make_shared<PodBasis>();
  pod->points.resize(3, 1);
  pod->points << 0.0, 0.5, 1.0;
  pod->basis = Matrix::Identity(3, 2);
  pod->mean = Vector::Constant(3, 0.25);
  DonSpec spec;
  spec.branch = linear_layer(1, 2);
  spec.pod = pod;
  spec.latent = 2;
  Vector theta(4);
  theta << 2.0, -1.0, 0.0, 0.0;
  const double y = 1.0;
  const double x0 = 0.0, x1 = 0.5, x2 = 1.0;
  CHECK(don_eval(spec, theta, std::span<const double>(&y, 1), std::span<const double>(&x0, 1)) == 2.25);
  CHECK(don_eval(spec, theta, std::span<const double>(&y, 1), std::span<const double>(&x1, 1)) == -0.75);
  CHECK(don_eval(spec, theta, std::span<const double>(&y, 1), std::span<const double>(&x2, 1)) == 0.25);
}
