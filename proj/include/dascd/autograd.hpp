#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

#include "dascd/tensor.hpp"

namespace dascd {

class Graph;

/// Handle to a value recorded in a Graph. Cheap to copy; valid while the
/// owning graph is alive.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return graph_ != nullptr; }
  Graph* graph() const noexcept { return graph_; }
  std::size_t id() const noexcept { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Tape for reverse-mode differentiation.
///
/// Nodes are appended in execution order, so the tape order is already a
/// valid topological order: every input precedes the node that consumes it.
/// A graph is built for one forward pass and consumed by one backward pass.
class Graph {
 public:
  /// Propagates the node's output gradient into its inputs via accumulate().
  using BackwardFn = std::function<void(Graph&, const Tensor& grad_out)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var parameter(Tensor value);

  /// Appends an op result. The backward closure is kept only when some
  /// input requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and walks the tape backwards.
  void backward(Var loss);
  bool backward_done() const noexcept { return backward_done_; }

  /// Gradient of the last backward pass with respect to a parameter (or any
  /// grad-tracking node). Nodes the loss does not depend on get zeros.
  Tensor grad(Var v) const;

  /// Adds g into v's gradient buffer; ignored for nodes without grad tracking.
  void accumulate(Var v, std::span<const double> g);
  void accumulate(Var v, const Tensor& g) { accumulate(v, g.data()); }

  std::size_t size() const noexcept { return nodes_.size(); }
  /// Input node ids of node `id`, in recording order.
  const std::vector<std::size_t>& inputs_of(std::size_t id) const { return nodes_.at(id).inputs; }

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    std::optional<std::vector<double>> grad;
  };

  void check_owned(Var v, const char* what) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace dascd
