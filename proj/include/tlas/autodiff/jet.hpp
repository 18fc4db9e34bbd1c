#pragma once

#include "tlas/autodiff/tape.hpp"

#include <array>
#include <cmath>
#include <utility>
#include <vector>

namespace tlas::ad {

/// Second-order forward-mode number over up to three input coordinates.
///
/// Carries the value, the gradient and the (symmetric) Hessian with respect to
/// the tracked coordinates. Reading a derivative that is not tracked throws,
/// so residuals that need an entry the caller did not request fail loudly.
class Jet2 {
 public:
  static constexpr int kMaxDim = 3;

  Jet2() = default;
  explicit Jet2(double value) : value_(value) {}

  static Jet2 constant(double value) { return Jet2(value); }
  /// Independent variable x_coord; `second` enables Hessian tracking.
  static Jet2 variable(double value, int coord, bool second = true);

  double value() const noexcept { return value_; }
  double d1(int i) const;
  double d2(int i, int j) const;
  bool tracks(int i) const noexcept { return i >= 0 && i < kMaxDim && (mask_ >> i) & 1u; }
  bool has_second() const noexcept { return second_; }
  unsigned mask() const noexcept { return mask_; }

  Jet2 operator-() const;
  Jet2& operator+=(const Jet2& o);
  Jet2& operator-=(const Jet2& o);
  Jet2& operator*=(const Jet2& o);
  Jet2& operator/=(const Jet2& o);

  friend Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
  friend Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
  friend Jet2 operator*(Jet2 a, const Jet2& b) { return a *= b; }
  friend Jet2 operator/(Jet2 a, const Jet2& b) { return a /= b; }
  friend Jet2 operator+(Jet2 a, double c) { a.value_ += c; return a; }
  friend Jet2 operator+(double c, Jet2 a) { a.value_ += c; return a; }
  friend Jet2 operator-(Jet2 a, double c) { a.value_ -= c; return a; }
  friend Jet2 operator-(double c, const Jet2& a) { return (-a) + c; }
  friend Jet2 operator*(Jet2 a, double c) { return a.scaled(c); }
  friend Jet2 operator*(double c, Jet2 a) { return a.scaled(c); }
  friend Jet2 operator/(Jet2 a, double c) { return a.scaled(1.0 / c); }

  /// Applies a scalar function given f(v), f'(v), f''(v) (chain rule).
  Jet2 apply(double f, double df, double d2f) const;

 private:
  Jet2 scaled(double c) const;
  void merge_tracking(const Jet2& o) {
    mask_ |= o.mask_;
    second_ = second_ || o.second_;
  }

  double value_ = 0.0;
  std::array<double, kMaxDim> grad_{};
  std::array<double, kMaxDim * kMaxDim> hess_{};
  unsigned mask_ = 0;
  bool second_ = false;
};

Jet2 sin(const Jet2& x);
Jet2 cos(const Jet2& x);
Jet2 exp(const Jet2& x);
Jet2 log(const Jet2& x);
Jet2 tanh(const Jet2& x);
Jet2 sqrt(const Jet2& x);

/// Which input derivatives a batched jet carries.
struct JetSpec {
  std::vector<int> first;
  std::vector<std::pair<int, int>> second;

  /// All first derivatives in `wrt`, and when order == 2 all pairs i <= j.
  static JetSpec full(const std::vector<int>& wrt, int order);

  int first_slot(int coord) const;
  int second_slot(int i, int j) const;
  bool empty() const { return first.empty() && second.empty(); }
};

/// A batch of jets recorded on a tape: one row per point, one column per
/// output. Entries in `first`/`second` follow the JetSpec ordering; an
/// invalid Var denotes an identically zero channel.
struct JetVar {
  JetSpec spec;
  Var value;
  std::vector<Var> first;
  std::vector<Var> second;

  Var d1(int coord) const;
  Var d2(int i, int j) const;
  /// Replaces structurally zero channels with explicit zero constants.
  void materialize();
};

}  // namespace tlas::ad
