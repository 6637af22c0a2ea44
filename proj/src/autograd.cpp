#include "dascd/autograd.hpp"

#include <string>

namespace dascd {

const Tensor& Var::value() const {
  if (!graph_) throw StateError("value() on an unbound Var");
  return graph_->value(*this);
}

void Graph::check_owned(Var v, const char* what) const {
  if (v.graph() != this || v.id() >= nodes_.size()) {
    throw StateError(std::string(what) + ": Var does not belong to this graph");
  }
}

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, std::nullopt});
  return Var(this, nodes_.size() - 1);
}

Var Graph::parameter(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true, std::nullopt});
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Graph::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  if (backward_done_) throw StateError("cannot record into a graph after backward()");
  Node node{std::move(value), {}, {}, false, std::nullopt};
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    check_owned(in, "record");
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Graph::value(Var v) const {
  check_owned(v, "value");
  return nodes_[v.id()].value;
}

bool Graph::requires_grad(Var v) const {
  check_owned(v, "requires_grad");
  return nodes_[v.id()].requires_grad;
}

void Graph::backward(Var loss) {
  if (!loss.valid()) throw StateError("backward() called before any forward pass produced a loss");
  check_owned(loss, "backward");
  if (backward_done_) throw StateError("backward() already ran on this graph");
  const Node& root = nodes_[loss.id()];
  if (root.value.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + to_string(root.value.shape()));
  }
  backward_done_ = true;
  if (!root.requires_grad) return;
  nodes_[loss.id()].grad = std::vector<double>{1.0};
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.grad || !node.backward) continue;
    const Tensor grad_out(node.value.shape(), *node.grad);
    node.backward(*this, grad_out);
  }
}

Tensor Graph::grad(Var v) const {
  check_owned(v, "grad");
  if (!backward_done_) throw StateError("grad() requested before backward()");
  const Node& node = nodes_[v.id()];
  if (!node.requires_grad) throw StateError("grad() requested for a node that does not track gradients");
  if (!node.grad) return Tensor(node.value.shape(), 0.0);
  return Tensor(node.value.shape(), *node.grad);
}

void Graph::accumulate(Var v, std::span<const double> g) {
  check_owned(v, "accumulate");
  Node& node = nodes_[v.id()];
  if (!node.requires_grad) return;
  if (g.size() != node.value.size()) {
    throw ShapeError("gradient of size " + std::to_string(g.size()) + " for node of shape " +
                     to_string(node.value.shape()));
  }
  if (!node.grad) {
    node.grad.emplace(g.begin(), g.end());
    return;
  }
  auto& buf = *node.grad;
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

}  // namespace dascd
