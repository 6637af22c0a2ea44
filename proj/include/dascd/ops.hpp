#pragma once

#include <optional>

#include "dascd/autograd.hpp"

/// Differentiable primitives. Every op records its result in the operands'
/// graph together with its gradient rule. Shapes must match exactly; the only
/// broadcast is scalar·tensor.
namespace dascd::ops {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
/// s·x for a single-element s.
Var scale_by(Var s, Var x);
Var sum(Var x);
Var relu(Var x);
Var reshape(Var x, Shape shape);

/// (m×k)·(k×n) matrices.
Var matmul(Var a, Var b);
Var transpose(Var m);
/// Row-wise softmax of a matrix, with per-row max subtraction.
Var softmax_rows(Var m);

/// input C_in×H×W, kernels C_out×C_in×k×k, optional bias of length C_out.
Var conv2d(Var input, Var kernels, std::optional<Var> bias, std::size_t stride, std::size_t padding);
/// 2×2 mean pooling on a C×H×W map with even H and W.
Var avg_pool2(Var input);

/// Σ_k weights[k]·terms[k] over single-element terms.
Var weighted_sum(std::span<const Var> terms, std::span<const double> weights);

/// Plain-tensor forms used by tests and non-differentiable callers.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& m);
Tensor conv2d(const Tensor& input, const Tensor& kernels, std::size_t stride, std::size_t padding);

}  // namespace dascd::ops
