#include "dascd/binary_map.hpp"

#include <string>

#include "dascd/tensor.hpp"

namespace dascd {

BinaryMap::BinaryMap(std::size_t h, std::size_t w, std::vector<std::uint8_t> v)
    : height(h), width(w), values(std::move(v)) {
  if (values.size() != h * w) {
    throw ShapeError("binary map " + std::to_string(h) + "x" + std::to_string(w) + " needs " + std::to_string(h * w) +
                     " values, got " + std::to_string(values.size()));
  }
  for (auto x : values) {
    if (x > 1) throw ContractError("binary map entries must be 0 or 1");
  }
}

std::size_t BinaryMap::count_ones() const noexcept {
  std::size_t n = 0;
  for (auto x : values) n += x;
  return n;
}

LabelMap downsample_majority(const LabelMap& labels, std::size_t factor) {
  if (factor == 0) throw ContractError("downsample factor must be positive");
  if (labels.height % factor != 0 || labels.width % factor != 0) {
    throw ShapeError("label map " + std::to_string(labels.height) + "x" + std::to_string(labels.width) +
                     " not divisible by " + std::to_string(factor));
  }
  const std::size_t h = labels.height / factor, w = labels.width / factor;
  LabelMap out(h, w);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      std::size_t changed = 0;
      for (std::size_t a = 0; a < factor; ++a)
        for (std::size_t b = 0; b < factor; ++b) changed += labels(i * factor + a, j * factor + b);
      out(i, j) = 2 * changed >= factor * factor ? 1 : 0;
    }
  return out;
}

BinaryMap upsample_nearest(const BinaryMap& map, std::size_t factor) {
  if (factor == 0) throw ContractError("upsample factor must be positive");
  BinaryMap out(map.height * factor, map.width * factor);
  for (std::size_t i = 0; i < out.height; ++i)
    for (std::size_t j = 0; j < out.width; ++j) out(i, j) = map(i / factor, j / factor);
  return out;
}

}  // namespace dascd
