#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cedr/matrix.hpp"

namespace cedr::nn {

/// A trainable tensor. `grad` always has the same shape as `value`.
struct ParamTensor {
  ParamTensor() = default;
  ParamTensor(std::string name_, Matrix value_)
      : name(std::move(name_)), value(std::move(value_)), grad(value.rows(), value.cols()) {}

  std::string name;
  Matrix value;
  Matrix grad;

  void zero_grad() { grad = Matrix(value.rows(), value.cols()); }
};

/// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

class Tape;

/// Propagates the gradient of a node's output into the gradients of its inputs.
using Backprop = std::function<void(Tape& tape, const Matrix& out_grad)>;

/// Explicit computation record for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so replaying them backwards is a
/// valid topological order. Parameter leaves hold a pointer to their
/// ParamTensor; `backward` overwrites `ParamTensor::grad` for every parameter
/// registered on the tape (zero when the loss does not depend on it).
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives gradient.
  Var constant(Matrix value, std::string name = "constant");
  /// Leaf whose gradient is kept and can be read back after `backward`.
  Var input(Matrix value, std::string name = "input");
  /// Leaf bound to a trainable tensor. The tensor must outlive the tape.
  Var param(ParamTensor& p);

  /// Records the result of an operation.
  Var record(std::string op, Matrix value, Backprop backprop);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient of the last backward's loss w.r.t. `v` (empty if unreached).
  const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }
  const std::string& op_name(Var v) const { return nodes_.at(v.id).op; }
  std::size_t size() const { return nodes_.size(); }

  /// Adds `g` into the gradient of `v`, allocating it on first use.
  void accumulate(Var v, const Matrix& g);
  /// Mutable gradient buffer of `v`, zero-initialised on first use.
  Matrix& grad_buffer(Var v);

  /// Runs reverse accumulation from a 1×1 loss node. Throws NumericError
  /// naming the first node (in backward order) whose gradient is not finite.
  void backward(Var loss);

 private:
  struct Node {
    std::string op;
    Matrix value;
    Matrix grad;
    Backprop backprop;
    ParamTensor* param = nullptr;
    bool keep_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
};

}  // namespace cedr::nn
