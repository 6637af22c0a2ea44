#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dascd {

/// H×W array of {0, 1} values, row-major.
struct BinaryMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> values;

  BinaryMap() = default;
  BinaryMap(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), values(h * w, fill) {}
  BinaryMap(std::size_t h, std::size_t w, std::vector<std::uint8_t> v);

  std::size_t size() const noexcept { return values.size(); }
  std::uint8_t operator()(std::size_t i, std::size_t j) const { return values[i * width + j]; }
  std::uint8_t& operator()(std::size_t i, std::size_t j) { return values[i * width + j]; }
  std::size_t count_ones() const noexcept;

  friend bool operator==(const BinaryMap&, const BinaryMap&) = default;
};

/// Ground truth: 1 = changed, 0 = unchanged.
using LabelMap = BinaryMap;
/// Prediction: 1 = changed, 0 = unchanged.
using ChangeMap = BinaryMap;

/// Reduces a label map by an integer factor. A cell is changed when at
/// least half of its pixels are (ties count as changed).
LabelMap downsample_majority(const LabelMap& labels, std::size_t factor);

/// Nearest-neighbour enlargement by an integer factor.
BinaryMap upsample_nearest(const BinaryMap& map, std::size_t factor);

}  // namespace dascd
