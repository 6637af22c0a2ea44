#include "dascd/params.hpp"

#include <cmath>

namespace dascd {

Bindings bind_params(Graph& graph, const TensorMap& params, bool trainable) {
  Bindings out;
  for (const auto& [name, t] : params) out.emplace(name, trainable ? graph.parameter(t) : graph.constant(t));
  return out;
}

Var lookup(const Bindings& bindings, const std::string& name) {
  const auto it = bindings.find(name);
  if (it == bindings.end()) throw ContractError("missing parameter '" + name + "'");
  return it->second;
}

const Tensor& lookup(const TensorMap& params, const std::string& name) {
  const auto it = params.find(name);
  if (it == params.end()) throw ContractError("missing parameter '" + name + "'");
  return it->second;
}

Tensor he_normal(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (double& v : t.storage()) v = dist(rng);
  return t;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  // splitmix64 finalizer over the combined key
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ stream) ^ index);
}

}  // namespace dascd
