#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "dascd/binary_map.hpp"
#include "dascd/tensor.hpp"

namespace dascd {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit image, interleaved H×W×C (C = 1 or 3).
struct Image8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<std::uint8_t> pixels;

  Image8() = default;
  Image8(std::size_t h, std::size_t w, std::size_t c, std::uint8_t fill = 0)
      : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }

  friend bool operator==(const Image8&, const Image8&) = default;
};

struct ImagePair {
  Image8 t0;
  Image8 t1;
};

/// C×H×W reals in [0, 1] (value / 255).
Tensor to_tensor(const Image8& image);

/// Lossless 8-bit PNG (gray or RGB).
void save_image(const std::filesystem::path& path, const Image8& image);
/// Decodes any PNG to 8-bit RGB (channels = 3) or gray (channels = 1).
Image8 load_image(const std::filesystem::path& path, std::size_t channels = 3);

/// 1-bit gray PNG, white = 1.
void save_mask(const std::filesystem::path& path, const BinaryMap& mask);
/// Reads a single-channel label; pixel values must be in {0, 255} or {0, 1}.
LabelMap load_label(const std::filesystem::path& path);

/// Maps {0, 255} or {0, 1} gray values to a binary map.
LabelMap label_from_gray(const Image8& gray, const std::string& origin);

}  // namespace dascd
