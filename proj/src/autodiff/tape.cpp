#include "tlas/autodiff/tape.hpp"

#include <sstream>

namespace tlas::ad {
namespace {

enum class Shape { Same, Scalar, Row, Col };

Shape classify(const Matrix& a, const Matrix& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Shape::Same;
  if (b.rows() == 1 && b.cols() == 1) return Shape::Scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Shape::Row;
  if (b.cols() == 1 && b.rows() == a.rows()) return Shape::Col;
  std::ostringstream msg;
  msg << "incompatible shapes " << a.rows() << "x" << a.cols() << " and " << b.rows() << "x" << b.cols();
  throw Error(msg.str());
}

// Sums `d` down to the shape of a broadcast operand.
void accumulate_reduced(Matrix& target, const Matrix& d, Shape shape, double sign) {
  switch (shape) {
    case Shape::Same:
      target.noalias() += sign * d;
      break;
    case Shape::Scalar:
      target(0, 0) += sign * d.sum();
      break;
    case Shape::Row:
      target.row(0) += sign * d.colwise().sum();
      break;
    case Shape::Col:
      target.col(0) += sign * d.rowwise().sum();
      break;
  }
}

template <class F>
void broadcast_apply(Matrix& out, const Matrix& a, const Matrix& b, Shape shape, F f) {
  out.resize(a.rows(), a.cols());
  switch (shape) {
    case Shape::Same:
      f(out.array(), a.array(), b.array());
      break;
    case Shape::Scalar:
      f(out.array(), a.array(), Matrix::Constant(a.rows(), a.cols(), b(0, 0)).array());
      break;
    case Shape::Row:
      f(out.array(), a.array(), b.row(0).replicate(a.rows(), 1).array());
      break;
    case Shape::Col:
      f(out.array(), a.array(), b.col(0).replicate(1, a.cols()).array());
      break;
  }
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Param: return "param";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::Shift: return "shift";
    case Op::Tanh: return "tanh";
    case Op::Relu: return "relu";
    case Op::Square: return "square";
    case Op::Sum: return "sum";
    case Op::GatherRows: return "gather_rows";
    case Op::RowSum: return "row_sum";
    case Op::Transpose: return "transpose";
  }
  return "?";
}

const Matrix& Var::value() const { return tape_->value(id_); }

void Tape::reset(const Vector& theta, const std::vector<char>* active) {
  if (active && static_cast<Index>(active->size()) != theta.size()) {
    throw Error("active mask length does not match parameter count");
  }
  theta_ = &theta;
  active_ = active;
  count_ = 0;
}

void Tape::reset() {
  theta_ = nullptr;
  active_ = nullptr;
  count_ = 0;
}

void Tape::check_owner(Var v) const {
  if (!v.valid() || &v.tape() != this || v.id() < 0 || v.id() >= count_) {
    throw Error("variable does not belong to the current recording");
  }
}

Tape::Node& Tape::push(Op op, Index a, Index b) {
  if (static_cast<std::size_t>(count_) == nodes_.size()) nodes_.emplace_back();
  Node& n = nodes_[static_cast<std::size_t>(count_)];
  n.op = op;
  n.a = a;
  n.b = b;
  n.scalar = 0.0;
  n.offset = 0;
  n.needs_grad = false;
  if (a >= 0) n.needs_grad = nodes_[static_cast<std::size_t>(a)].needs_grad;
  if (b >= 0) n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(b)].needs_grad;
  ++count_;
  return n;
}

Var Tape::finish(Node& n) {
  const Index id = count_ - 1;
  if (!n.value.allFinite()) throw NonFiniteError(id, op_name(n.op));
  return Var(this, id);
}

Var Tape::constant(Matrix m) {
  Node& n = push(Op::Constant);
  n.value = std::move(m);
  return finish(n);
}

Var Tape::constant(double c) {
  Node& n = push(Op::Constant);
  n.value.resize(1, 1);
  n.value(0, 0) = c;
  return finish(n);
}

Var Tape::param(Index offset, Index rows, Index cols) {
  if (!theta_) throw Error("tape has no parameters");
  if (offset < 0 || rows < 0 || cols < 0 || offset + rows * cols > theta_->size()) {
    throw Error("parameter block out of range");
  }
  Node& n = push(Op::Param);
  n.offset = offset;
  n.value = Eigen::Map<const Matrix>(theta_->data() + offset, rows, cols);
  if (active_ == nullptr) {
    n.needs_grad = true;
  } else {
    for (Index k = 0; k < rows * cols; ++k) {
      if ((*active_)[static_cast<std::size_t>(offset + k)]) {
        n.needs_grad = true;
        break;
      }
    }
  }
  return finish(n);
}

Var Tape::matmul(Var a, Var b) {
  check_owner(a);
  check_owner(b);
  if (a.cols() != b.rows()) throw Error("matmul: inner dimensions differ");
  Node& n = push(Op::MatMul, a.id(), b.id());
  n.value.noalias() = value(a.id()) * value(b.id());
  return finish(n);
}

Var Tape::add(Var a, Var b) {
  check_owner(a);
  check_owner(b);
  if (a.rows() * a.cols() < b.rows() * b.cols()) std::swap(a, b);
  const Shape s = classify(a.value(), b.value());
  Node& n = push(Op::Add, a.id(), b.id());
  broadcast_apply(n.value, value(a.id()), value(b.id()), s, [](auto o, auto x, auto y) { o = x + y; });
  return finish(n);
}

Var Tape::sub(Var a, Var b) {
  check_owner(a);
  check_owner(b);
  if (a.rows() * a.cols() < b.rows() * b.cols()) return add(scale(b, -1.0), a);
  const Shape s = classify(a.value(), b.value());
  Node& n = push(Op::Sub, a.id(), b.id());
  broadcast_apply(n.value, value(a.id()), value(b.id()), s, [](auto o, auto x, auto y) { o = x - y; });
  return finish(n);
}

Var Tape::mul(Var a, Var b) {
  check_owner(a);
  check_owner(b);
  if (a.rows() * a.cols() < b.rows() * b.cols()) std::swap(a, b);
  const Shape s = classify(a.value(), b.value());
  Node& n = push(Op::Mul, a.id(), b.id());
  broadcast_apply(n.value, value(a.id()), value(b.id()), s, [](auto o, auto x, auto y) { o = x * y; });
  return finish(n);
}

Var Tape::scale(Var a, double c) {
  check_owner(a);
  Node& n = push(Op::Scale, a.id());
  n.scalar = c;
  n.value = c * value(a.id());
  return finish(n);
}

Var Tape::shift(Var a, double c) {
  check_owner(a);
  Node& n = push(Op::Shift, a.id());
  n.scalar = c;
  n.value = value(a.id()).array() + c;
  return finish(n);
}

Var Tape::tanh(Var a) {
  check_owner(a);
  Node& n = push(Op::Tanh, a.id());
  n.value = value(a.id()).array().tanh();
  return finish(n);
}

Var Tape::relu(Var a) {
  check_owner(a);
  Node& n = push(Op::Relu, a.id());
  n.value = value(a.id()).array().max(0.0);
  return finish(n);
}

Var Tape::step(Var a) {
  check_owner(a);
  Node& n = push(Op::Constant);
  n.value = (value(a.id()).array() > 0.0).cast<double>();
  return finish(n);
}

Var Tape::square(Var a) {
  check_owner(a);
  Node& n = push(Op::Square, a.id());
  n.value = value(a.id()).array().square();
  return finish(n);
}

Var Tape::sum(Var a) {
  check_owner(a);
  Node& n = push(Op::Sum, a.id());
  n.value.resize(1, 1);
  n.value(0, 0) = value(a.id()).sum();
  return finish(n);
}

Var Tape::mean(Var a) {
  const double count = static_cast<double>(a.rows() * a.cols());
  return scale(sum(a), 1.0 / count);
}

Var Tape::gather_rows(Var a, std::vector<Index> rows) {
  check_owner(a);
  for (Index r : rows) {
    if (r < 0 || r >= a.rows()) throw Error("gather_rows: row index out of range");
  }
  Node& n = push(Op::GatherRows, a.id());
  n.rows = std::move(rows);
  const Matrix& src = value(a.id());
  n.value.resize(static_cast<Index>(n.rows.size()), src.cols());
  for (std::size_t k = 0; k < n.rows.size(); ++k) n.value.row(static_cast<Index>(k)) = src.row(n.rows[k]);
  return finish(n);
}

Var Tape::row_sum(Var a) {
  check_owner(a);
  Node& n = push(Op::RowSum, a.id());
  n.value = value(a.id()).rowwise().sum();
  return finish(n);
}

Var Tape::transpose(Var a) {
  check_owner(a);
  Node& n = push(Op::Transpose, a.id());
  n.value = value(a.id()).transpose();
  return finish(n);
}

void Tape::backward(Var out, Vector& grad) {
  check_owner(out);
  if (out.rows() != 1 || out.cols() != 1) throw Error("backward without seed needs a scalar output");
  backward(out, Matrix::Ones(1, 1), grad);
}

void Tape::backward(Var out, const Matrix& seed, Vector& grad) {
  check_owner(out);
  if (theta_ && grad.size() != theta_->size()) throw Error("gradient buffer has wrong length");
  if (seed.rows() != out.rows() || seed.cols() != out.cols()) throw Error("seed shape mismatch");

  const auto last = static_cast<std::size_t>(out.id());
  for (std::size_t i = 0; i <= last; ++i) {
    Node& n = nodes_[i];
    if (n.needs_grad) n.adjoint.setZero(n.value.rows(), n.value.cols());
  }
  if (!nodes_[last].needs_grad) return;
  nodes_[last].adjoint = seed;

  for (std::size_t i = last + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad) continue;
    const Matrix& d = n.adjoint;
    Node* a = n.a >= 0 ? &nodes_[static_cast<std::size_t>(n.a)] : nullptr;
    Node* b = n.b >= 0 ? &nodes_[static_cast<std::size_t>(n.b)] : nullptr;
    const bool ga = a && a->needs_grad;
    const bool gb = b && b->needs_grad;
    switch (n.op) {
      case Op::Constant:
        break;
      case Op::Param: {
        Eigen::Map<const Vector> flat(d.data(), d.size());
        grad.segment(n.offset, d.size()) += flat;
        break;
      }
      case Op::MatMul:
        if (ga) a->adjoint.noalias() += d * b->value.transpose();
        if (gb) b->adjoint.noalias() += a->value.transpose() * d;
        break;
      case Op::Add:
        if (ga) a->adjoint += d;
        if (gb) accumulate_reduced(b->adjoint, d, classify(a->value, b->value), 1.0);
        break;
      case Op::Sub:
        if (ga) a->adjoint += d;
        if (gb) accumulate_reduced(b->adjoint, d, classify(a->value, b->value), -1.0);
        break;
      case Op::Mul: {
        const Shape s = classify(a->value, b->value);
        if (ga) {
          Matrix t;
          broadcast_apply(t, d, b->value, s, [](auto o, auto x, auto y) { o = x * y; });
          a->adjoint += t;
        }
        if (gb) {
          Matrix t = (d.array() * a->value.array()).matrix();
          accumulate_reduced(b->adjoint, t, s, 1.0);
        }
        break;
      }
      case Op::Scale:
        if (ga) a->adjoint += n.scalar * d;
        break;
      case Op::Shift:
        if (ga) a->adjoint += d;
        break;
      case Op::Tanh:
        if (ga) a->adjoint.array() += d.array() * (1.0 - n.value.array().square());
        break;
      case Op::Relu:
        if (ga) a->adjoint.array() += d.array() * (a->value.array() > 0.0).cast<double>();
        break;
      case Op::Square:
        if (ga) a->adjoint.array() += 2.0 * d.array() * a->value.array();
        break;
      case Op::Sum:
        if (ga) a->adjoint.array() += d(0, 0);
        break;
      case Op::GatherRows:
        if (ga) {
          for (std::size_t k = 0; k < n.rows.size(); ++k) a->adjoint.row(n.rows[k]) += d.row(static_cast<Index>(k));
        }
        break;
      case Op::RowSum:
        if (ga) a->adjoint.colwise() += d.col(0);
        break;
      case Op::Transpose:
        if (ga) a->adjoint += d.transpose();
        break;
    }
  }

  if (active_) {
    for (Index k = 0; k < grad.size(); ++k) {
      if (!(*active_)[static_cast<std::size_t>(k)]) grad[k] = 0.0;
    }
  }
}

Var operator+(Var a, Var b) { return a.tape().add(a, b); }
Var operator-(Var a, Var b) { return a.tape().sub(a, b); }
Var operator*(Var a, Var b) { return a.tape().mul(a, b); }
Var operator-(Var a) { return a.tape().scale(a, -1.0); }
Var operator*(double c, Var a) { return a.tape().scale(a, c); }
Var operator*(Var a, double c) { return a.tape().scale(a, c); }
Var operator+(Var a, double c) { return a.tape().shift(a, c); }
Var operator+(double c, Var a) { return a.tape().shift(a, c); }
Var operator-(Var a, double c) { return a.tape().shift(a, -c); }
Var operator-(double c, Var a) { return a.tape().shift(a.tape().scale(a, -1.0), c); }
Var tanh(Var a) { return a.tape().tanh(a); }
Var square(Var a) { return a.tape().square(a); }

ValueAndGradient reverse_grad(const LossClosure& closure, const Vector& theta, const std::vector<char>* active) {
  thread_local Tape tape;
  tape.reset(theta, active);
  Var loss = closure(tape);
  if (loss.rows() != 1 || loss.cols() != 1) throw Error("loss closure must return a scalar");
  ValueAndGradient out;
  out.loss = loss.scalar();
  out.grad = Vector::Zero(theta.size());
  tape.backward(loss, out.grad);
  return out;
}

double evaluate(const LossClosure& closure, const Vector& theta) {
  thread_local Tape tape;
  tape.reset(theta);
  Var loss = closure(tape);
  if (loss.rows() != 1 || loss.cols() != 1) throw Error("loss closure must return a scalar");
  return loss.scalar();
}

}  // namespace tlas::ad
