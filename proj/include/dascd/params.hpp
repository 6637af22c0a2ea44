#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "dascd/archive.hpp"
#include "dascd/autograd.hpp"

namespace dascd {

using Rng = std::mt19937_64;

/// Graph handles for a parameter set, keyed like the TensorMap they came from.
using Bindings = std::map<std::string, Var>;

/// Records every tensor of `params` in `graph`, as trainable parameters or as constants.
Bindings bind_params(Graph& graph, const TensorMap& params, bool trainable);

Var lookup(const Bindings& bindings, const std::string& name);
const Tensor& lookup(const TensorMap& params, const std::string& name);

/// N(0, 2/fan_in) draws.
Tensor he_normal(Shape shape, std::size_t fan_in, Rng& rng);

/// Derives an independent, reproducible seed for a named sub-stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) noexcept;

}  // namespace dascd
