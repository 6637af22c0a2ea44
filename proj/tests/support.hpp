#pragma once

#include <cstdint>
#include <random>

#include "dascd/binary_map.hpp"
#include "dascd/tensor.hpp"

namespace dascd::test {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.storage()) v = u(rng);
  return t;
}

inline BinaryMap random_map(std::size_t h, std::size_t w, std::mt19937_64& rng, double p = 0.5) {
  BinaryMap m(h, w);
  std::bernoulli_distribution b(p);
  for (auto& v : m.values) v = b(rng) ? 1 : 0;
  return m;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace dascd::test
