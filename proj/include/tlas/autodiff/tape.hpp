#pragma once

#include "tlas/autodiff/dense.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace tlas::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
/// is not reset.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, Index id) : tape_(tape), id_(id) {}

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  Index id() const noexcept { return id_; }

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

 private:
  Tape* tape_ = nullptr;
  Index id_ = -1;
};

enum class Op : std::uint8_t {
  Constant,
  Param,
  MatMul,
  Add,
  Sub,
  Mul,
  Scale,
  Shift,
  Tanh,
  Relu,
  Square,
  Sum,
  GatherRows,
  RowSum,
  Transpose,
};

const char* op_name(Op op);

/// Append-only record of matrix-valued primitives over a flat parameter
/// vector. Insertion order is a topological order, so one reverse sweep
/// yields the parameter gradient of any recorded scalar.
///
/// Binary elementwise primitives broadcast their second operand when it is
/// 1x1, a single row, or a single column.
///
/// A tape is single-owner. Node storage is kept across reset() so repeated
/// recordings of the same graph do not reallocate.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Begins a recording over `theta`. When `active` is given (one flag per
  /// coordinate) only flagged coordinates receive gradient, and primitives
  /// that cannot reach them are skipped in the reverse sweep.
  void reset(const Vector& theta, const std::vector<char>* active = nullptr);
  void reset();

  Index size() const noexcept { return count_; }
  Index parameter_count() const noexcept { return theta_ ? theta_->size() : 0; }
  const Vector& parameters() const { return *theta_; }

  Var constant(Matrix m);
  Var constant(double c);
  /// Reshapes theta[offset, offset + rows*cols) row-major into a rows x cols block.
  Var param(Index offset, Index rows, Index cols);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var shift(Var a, double c);
  Var tanh(Var a);
  Var relu(Var a);
  /// Heaviside step of `a`, recorded as a constant (zero derivative a.e.).
  Var step(Var a);
  Var square(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var gather_rows(Var a, std::vector<Index> rows);
  Var row_sum(Var a);
  Var transpose(Var a);

  /// Reverse sweep from `out` seeded with `seed`; adds dout/dtheta into `grad`.
  void backward(Var out, const Matrix& seed, Vector& grad);
  /// Reverse sweep from a 1x1 output with unit seed.
  void backward(Var out, Vector& grad);

  const Matrix& value(Index id) const { return nodes_[static_cast<std::size_t>(id)].value; }

 private:
  struct Node {
    Op op = Op::Constant;
    Index a = -1;
    Index b = -1;
    double scalar = 0.0;
    Index offset = 0;
    bool needs_grad = false;
    Matrix value;
    Matrix adjoint;
    std::vector<Index> rows;
  };

  Node& push(Op op, Index a = -1, Index b = -1);
  Var finish(Node& node);
  Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id())]; }
  void check_owner(Var v) const;

  std::vector<Node> nodes_;
  Index count_ = 0;
  const Vector* theta_ = nullptr;
  const std::vector<char>* active_ = nullptr;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator-(Var a);
Var operator*(double c, Var a);
Var operator*(Var a, double c);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var tanh(Var a);
Var square(Var a);

/// Builds a scalar loss on the tape from the parameters it was reset with.
using LossClosure = std::function<Var(Tape&)>;

struct ValueAndGradient {
  double loss = 0.0;
  Vector grad;
};

/// Records `closure` at `theta` and sweeps once. The returned loss is the
/// forward value of the recording, identical to evaluate().
ValueAndGradient reverse_grad(const LossClosure& closure, const Vector& theta,
                              const std::vector<char>* active = nullptr);

/// Forward-only evaluation of `closure`.
double evaluate(const LossClosure& closure, const Vector& theta);

}  // namespace tlas::ad
