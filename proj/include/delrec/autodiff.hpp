#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "delrec/check.hpp"
#include "delrec/kernels.hpp"
#include "delrec/rng.hpp"
#include "delrec/tensor.hpp"

namespace delrec {

// A trainable (or frozen) tensor with its gradient accumulator. The two
// optimizer groups carry independent learning rates and schedules.
struct Parameter {
  enum class Group { weights, positions };

  std::string name;
  Group group = Group::weights;
  bool trainable = true;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Group g, Tensor v)
      : name(std::move(n)), group(g), value(std::move(v)) {
    grad = zeros_like(value);
  }

  void zero_grad() { grad.zero(); }
};

// Reverse-mode record of one forward pass. Each recorded node maps the
// gradient of its output sequence to the gradient of its input sequence,
// accumulating parameter gradients as a side effect. Nodes run in exact
// reverse order of recording; fan-in inside a node accumulates additively.
class Tape {
 public:
  using BackwardFn = std::function<Tensor(const Tensor& grad_out)>;

  void push(std::string name, BackwardFn fn) {
    nodes_.push_back({std::move(name), std::move(fn)});
  }

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  const std::string& node_name(std::size_t i) const { return nodes_[i].name; }

  // Runs the reverse sweep from the gradient of the final output; returns
  // the gradient w.r.t. the original input. Consumes the record.
  Tensor backward(Tensor grad) {
    DELREC_CHECK(!nodes_.empty(), "Tape::backward called before any forward");
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
      grad = it->fn(grad);
    nodes_.clear();
    return grad;
  }

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    std::string name;
    BackwardFn fn;
  };
  std::vector<Node> nodes_;
};

// Per-forward execution context threaded through the layer chain.
struct Context {
  bool training = false;
  bool soft = false;       // smooth fire for gradient verification
  double sigma = 0.0;      // current spread width for learned recurrent delays
  Rng* rng = nullptr;      // required when training with dropout/augment
  Tape* tape = nullptr;    // null for pure evaluation
  const kernels::Backend* backend = &kernels::active_backend();
};

}  // namespace delrec
