#include "cedr/tape.hpp"

#include "cedr/error.hpp"

namespace cedr::nn {

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Matrix value, std::string name) {
  return push(Node{std::move(name), std::move(value), {}, {}, nullptr, false});
}

Var Tape::input(Matrix value, std::string name) {
  return push(Node{std::move(name), std::move(value), {}, {}, nullptr, true});
}

Var Tape::param(ParamTensor& p) {
  if (!p.grad.same_shape(p.value)) p.zero_grad();
  return push(Node{"param:" + p.name, p.value, {}, {}, &p, true});
}

Var Tape::record(std::string op, Matrix value, Backprop backprop) {
  return push(Node{std::move(op), std::move(value), {}, std::move(backprop), nullptr, false});
}

Matrix& Tape::grad_buffer(Var v) {
  Node& n = nodes_.at(v.id);
  if (!n.grad.same_shape(n.value)) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
  Matrix& buf = grad_buffer(v);
  if (!buf.same_shape(g)) {
    throw ShapeError("gradient " + g.shape_string() + " does not match node '" +
                     nodes_[v.id].op + "' of shape " + buf.shape_string());
  }
  buf += g;
}

void Tape::backward(Var loss) {
  Node& root = nodes_.at(loss.id);
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ShapeError("backward needs a 1x1 loss, got " + root.value.shape_string());
  }
  if (!root.value.all_finite()) {
    throw NumericError("loss node #" + std::to_string(loss.id) + " '" + root.op +
                       "' is not finite");
  }
  for (auto& n : nodes_) {
    if (!n.keep_grad) n.grad = Matrix();
    else n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  grad_buffer(loss)(0, 0) = 1.0;

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (!n.grad.all_finite()) {
      throw NumericError("non-finite gradient at node #" + std::to_string(i) + " '" + n.op + "'");
    }
    if (!n.backprop) continue;
    // Inputs always precede their consumers, so backprop never touches node i.
    Matrix g = std::move(n.grad);
    n.backprop(*this, g);
    if (n.keep_grad) n.grad = std::move(g);
  }

  for (auto& n : nodes_) {
    if (n.param != nullptr) n.param->zero_grad();
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    if (n.param == nullptr) continue;
    if (!n.grad.all_finite()) {
      throw NumericError("non-finite gradient at node #" + std::to_string(i) + " '" + n.op + "'");
    }
    n.param->grad += n.grad;
  }
}

}  // namespace cedr::nn
