#include "sgldreg/tape.hpp"

#include "sgldreg/error.hpp"

namespace sgldreg {

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.value.set_requires_grad(false);
  n.leaf = true;
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.value.set_requires_grad(true);
  n.requires_grad = true;
  n.leaf = true;
  return push(std::move(n));
}

Var Tape::leaf(Tensor value) {
  return value.requires_grad() ? variable(std::move(value)) : constant(std::move(value));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw std::logic_error("operation mixes variables from different tapes");
    n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

Tensor* Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return &n.grad;
}

GradientMap Tape::backward(Var loss) {
  if (loss.tape_ != this) throw std::logic_error("loss belongs to another tape");
  if (loss.value().size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " + to_string(loss.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  if (Tensor* seed = grad_buffer(loss.id_)) seed->fill(1.0);

  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, id, n.grad);
  }

  GradientMap grads;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (n.leaf && n.requires_grad) grads.emplace(id, gradient(Var(this, id)));
  }
  return grads;
}

Tensor Tape::gradient(Var v) const {
  const Node& n = nodes_.at(v.id_);
  if (n.grad.empty()) return Tensor(n.value.shape(), 0.0);
  return n.grad;
}

}  // namespace sgldreg
