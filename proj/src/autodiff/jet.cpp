#include "tlas/autodiff/jet.hpp"

#include <string>

namespace tlas::ad {

Jet2 Jet2::variable(double value, int coord, bool second) {
  if (coord < 0 || coord >= kMaxDim) throw Error("jet coordinate out of range");
  Jet2 j(value);
  j.grad_[static_cast<std::size_t>(coord)] = 1.0;
  j.mask_ = 1u << coord;
  j.second_ = second;
  return j;
}

double Jet2::d1(int i) const {
  if (!tracks(i)) throw Error("jet has no first derivative for coordinate " + std::to_string(i));
  return grad_[static_cast<std::size_t>(i)];
}

double Jet2::d2(int i, int j) const {
  if (!second_ || !tracks(i) || !tracks(j)) {
    throw Error("jet has no second derivative for (" + std::to_string(i) + "," + std::to_string(j) + ")");
  }
  return hess_[static_cast<std::size_t>(i * kMaxDim + j)];
}

Jet2 Jet2::operator-() const { return scaled(-1.0); }

Jet2 Jet2::scaled(double c) const {
  Jet2 r = *this;
  r.value_ *= c;
  for (auto& g : r.grad_) g *= c;
  for (auto& h : r.hess_) h *= c;
  return r;
}

Jet2& Jet2::operator+=(const Jet2& o) {
  value_ += o.value_;
  for (int i = 0; i < kMaxDim; ++i) grad_[i] += o.grad_[i];
  for (int i = 0; i < kMaxDim * kMaxDim; ++i) hess_[i] += o.hess_[i];
  merge_tracking(o);
  return *this;
}

Jet2& Jet2::operator-=(const Jet2& o) {
  value_ -= o.value_;
  for (int i = 0; i < kMaxDim; ++i) grad_[i] -= o.grad_[i];
  for (int i = 0; i < kMaxDim * kMaxDim; ++i) hess_[i] -= o.hess_[i];
  merge_tracking(o);
  return *this;
}

Jet2& Jet2::operator*=(const Jet2& o) {
  std::array<double, kMaxDim * kMaxDim> h{};
  for (int i = 0; i < kMaxDim; ++i) {
    for (int j = i; j < kMaxDim; ++j) {
      const int k = i * kMaxDim + j;
      h[k] = value_ * o.hess_[k] + o.value_ * hess_[k] + grad_[i] * o.grad_[j] + o.grad_[i] * grad_[j];
      h[j * kMaxDim + i] = h[k];
    }
  }
  for (int i = 0; i < kMaxDim; ++i) grad_[i] = value_ * o.grad_[i] + o.value_ * grad_[i];
  hess_ = h;
  value_ *= o.value_;
  merge_tracking(o);
  return *this;
}

Jet2& Jet2::operator/=(const Jet2& o) {
  const double v = o.value_;
  *this *= o.apply(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
  return *this;
}

Jet2 Jet2::apply(double f, double df, double d2f) const {
  Jet2 r = *this;
  r.value_ = f;
  for (int i = 0; i < kMaxDim; ++i) {
    for (int j = i; j < kMaxDim; ++j) {
      const int k = i * kMaxDim + j;
      r.hess_[k] = d2f * grad_[i] * grad_[j] + df * hess_[k];
      r.hess_[j * kMaxDim + i] = r.hess_[k];
    }
  }
  for (int i = 0; i < kMaxDim; ++i) r.grad_[i] = df * grad_[i];
  return r;
}

Jet2 sin(const Jet2& x) {
  const double s = std::sin(x.value()), c = std::cos(x.value());
  return x.apply(s, c, -s);
}

Jet2 cos(const Jet2& x) {
  const double s = std::sin(x.value()), c = std::cos(x.value());
  return x.apply(c, -s, -c);
}

Jet2 exp(const Jet2& x) {
  const double e = std::exp(x.value());
  return x.apply(e, e, e);
}

Jet2 log(const Jet2& x) {
  const double v = x.value();
  return x.apply(std::log(v), 1.0 / v, -1.0 / (v * v));
}

Jet2 tanh(const Jet2& x) {
  const double t = std::tanh(x.value());
  const double d = 1.0 - t * t;
  return x.apply(t, d, -2.0 * t * d);
}

Jet2 sqrt(const Jet2& x) {
  const double s = std::sqrt(x.value());
  return x.apply(s, 0.5 / s, -0.25 / (s * x.value()));
}

JetSpec JetSpec::full(const std::vector<int>& wrt, int order) {
  if (order != 1 && order != 2) throw Error("jet order must be 1 or 2");
  JetSpec spec;
  spec.first = wrt;
  if (order == 2) {
    for (std::size_t a = 0; a < wrt.size(); ++a) {
      for (std::size_t b = a; b < wrt.size(); ++b) spec.second.emplace_back(wrt[a], wrt[b]);
    }
  }
  return spec;
}

int JetSpec::first_slot(int coord) const {
  for (std::size_t k = 0; k < first.size(); ++k) {
    if (first[k] == coord) return static_cast<int>(k);
  }
  return -1;
}

int JetSpec::second_slot(int i, int j) const {
  if (i > j) std::swap(i, j);
  for (std::size_t k = 0; k < second.size(); ++k) {
    auto [a, b] = second[k];
    if (a > b) std::swap(a, b);
    if (a == i && b == j) return static_cast<int>(k);
  }
  return -1;
}

Var JetVar::d1(int coord) const {
  const int slot = spec.first_slot(coord);
  if (slot < 0) throw Error("jet batch has no first derivative for coordinate " + std::to_string(coord));
  const Var v = first[static_cast<std::size_t>(slot)];
  if (!v.valid()) throw Error("jet batch channel was not materialized");
  return v;
}

Var JetVar::d2(int i, int j) const {
  const int slot = spec.second_slot(i, j);
  if (slot < 0) {
    throw Error("jet batch has no second derivative for (" + std::to_string(i) + "," + std::to_string(j) + ")");
  }
  const Var v = second[static_cast<std::size_t>(slot)];
  if (!v.valid()) throw Error("jet batch channel was not materialized");
  return v;
}

void JetVar::materialize() {
  Tape& tape = value.tape();
  const Matrix zero = Matrix::Zero(value.rows(), value.cols());
  for (auto& v : first) {
    if (!v.valid()) v = tape.constant(zero);
  }
  for (auto& v : second) {
    if (!v.valid()) v = tape.constant(zero);
  }
}

}  // namespace tlas::ad
