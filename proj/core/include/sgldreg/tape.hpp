#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <map>

#include "sgldreg/tensor.hpp"

namespace sgldreg {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid until the tape
/// is cleared.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Extents& shape() const { return value().shape(); }
  bool requires_grad() const;
  bool valid() const noexcept { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Gradients of the last backward sweep, keyed by leaf node id.
using GradientMap = std::map<std::size_t, Tensor>;

/// Linear record of differentiable operations for reverse-mode gradients.
///
/// Nodes are appended in evaluation order, so every operation's inputs have a
/// smaller id than the operation itself and a reverse sweep over ids is a valid
/// topological order. A tape is single-threaded; independent tapes may be used
/// concurrently.
class Tape {
 public:
  /// Receives the accumulated gradient of node `self` and adds the
  /// contributions to its inputs through grad_buffer().
  using Backward = std::function<void(Tape& tape, std::size_t self, const Tensor& output_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  /// Leaf that tracks gradients iff value.requires_grad().
  Var leaf(Tensor value);

  /// Records an operation. The backward function is kept only when at least
  /// one input requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  /// Zero-initialised accumulation buffer for node `id` during a backward
  /// sweep, or nullptr when the node does not need a gradient.
  Tensor* grad_buffer(std::size_t id);

  /// Reverse sweep from a single-element `loss`. Returns the gradient of every
  /// leaf that requires one (zeros when the loss does not depend on it).
  GradientMap backward(Var loss);

  /// Gradient of `v` from the last backward sweep; zeros if none reached it.
  Tensor gradient(Var v) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() noexcept { nodes_.clear(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    bool requires_grad = false;
    bool leaf = false;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
};

}  // namespace sgldreg
