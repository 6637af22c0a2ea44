#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dascd/params.hpp"

namespace dascd {

/// Shared-weight convolutional feature extractor for both image dates.
///
/// Each block is a same-padded k×k convolution with bias, followed by ReLU
/// (all blocks but the last) and optional 2×2 mean pooling. The last block
/// has no ReLU so its output is a signed embedding, which the cosine
/// distance needs to span its full [0, 2] range.
struct EncoderConfig {
  std::vector<std::size_t> channels{16, 32, 32};
  std::size_t kernel_size = 3;
  std::vector<bool> downsample{true, true, false};

  static constexpr std::size_t kInputChannels = 3;
  static constexpr std::size_t kMinImageSide = 16;
  static constexpr std::size_t kMaxImageSide = 512;
  static constexpr std::size_t kMinFeatureSide = 4;

  std::size_t blocks() const noexcept { return channels.size(); }
  std::size_t out_channels() const { return channels.back(); }
  /// Spatial reduction factor, 2^(number of downsampling blocks).
  std::size_t stride() const noexcept;

  /// Throws ContractError when the configuration is inconsistent.
  void validate() const;
  /// Throws ShapeError when an H×W image cannot be encoded.
  void check_input(std::size_t height, std::size_t width) const;
};

std::string weight_name(std::size_t block);
std::string bias_name(std::size_t block);

/// He-initialized kernels and zero biases under "enc.block{i}.w" / "enc.block{i}.b".
TensorMap init_encoder(const EncoderConfig& cfg, Rng& rng);

/// image: 3×H×W. Returns C×(H/s)×(W/s) with s = cfg.stride().
Var encode(const Var& image, const Bindings& params, const EncoderConfig& cfg);
Tensor encode(const Tensor& image, const TensorMap& params, const EncoderConfig& cfg);

struct FeaturePair {
  Tensor f_t0;
  Tensor f_t1;
};

/// Encodes both dates with the same parameter set.
FeaturePair encode_pair(const Tensor& t0, const Tensor& t1, const TensorMap& params, const EncoderConfig& cfg);

}  // namespace dascd
