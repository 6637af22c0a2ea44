#include "dascd/encoder.hpp"

#include "dascd/ops.hpp"

namespace dascd {

std::size_t EncoderConfig::stride() const noexcept {
  std::size_t s = 1;
  for (bool d : downsample) s *= d ? 2 : 1;
  return s;
}

void EncoderConfig::validate() const {
  if (channels.empty()) throw ContractError("encoder: need at least one block");
  if (downsample.size() != channels.size()) {
    throw ContractError("encoder: downsample flags (" + std::to_string(downsample.size()) +
                        ") must match channel list (" + std::to_string(channels.size()) + ")");
  }
  for (auto c : channels) {
    if (c == 0) throw ContractError("encoder: channel counts must be positive");
  }
  if (kernel_size == 0 || kernel_size % 2 == 0) throw ContractError("encoder: kernel_size must be a positive odd integer");
  if (kMinImageSide / stride() < kMinFeatureSide) {
    throw ContractError("encoder: " + std::to_string(stride()) + "x downsampling leaves less than " +
                        std::to_string(kMinFeatureSide) + "x" + std::to_string(kMinFeatureSide) +
                        " features for the smallest supported image");
  }
}

void EncoderConfig::check_input(std::size_t height, std::size_t width) const {
  const std::size_t s = stride();
  if (height % s != 0 || width % s != 0) {
    const std::size_t ph = (s - height % s) % s, pw = (s - width % s) % s;
    throw ShapeError("encoder: image " + std::to_string(height) + "x" + std::to_string(width) +
                     " is not divisible by the encoder stride " + std::to_string(s) + "; pad by " +
                     std::to_string(ph) + " rows and " + std::to_string(pw) + " columns");
  }
  if (height < kMinImageSide || width < kMinImageSide || height > kMaxImageSide || width > kMaxImageSide) {
    throw ShapeError("encoder: image " + std::to_string(height) + "x" + std::to_string(width) + " outside supported range " +
                     std::to_string(kMinImageSide) + ".." + std::to_string(kMaxImageSide));
  }
}

std::string weight_name(std::size_t block) { return "enc.block" + std::to_string(block) + ".w"; }
std::string bias_name(std::size_t block) { return "enc.block" + std::to_string(block) + ".b"; }

TensorMap init_encoder(const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  TensorMap params;
  std::size_t c_in = EncoderConfig::kInputChannels;
  const std::size_t k = cfg.kernel_size;
  for (std::size_t b = 0; b < cfg.blocks(); ++b) {
    const std::size_t c_out = cfg.channels[b];
    params.emplace(weight_name(b), he_normal(Shape{c_out, c_in, k, k}, c_in * k * k, rng));
    params.emplace(bias_name(b), Tensor(Shape{c_out}, 0.0));
    c_in = c_out;
  }
  return params;
}

Var encode(const Var& image, const Bindings& params, const EncoderConfig& cfg) {
  const Tensor& img = image.value();
  if (img.rank() != 3 || img.dim(0) != EncoderConfig::kInputChannels) {
    throw ShapeError("encoder: expected a 3×H×W image, got " + to_string(img.shape()));
  }
  cfg.check_input(img.dim(1), img.dim(2));
  Var x = image;
  for (std::size_t b = 0; b < cfg.blocks(); ++b) {
    x = ops::conv2d(x, lookup(params, weight_name(b)), lookup(params, bias_name(b)), 1, cfg.kernel_size / 2);
    if (b + 1 < cfg.blocks()) x = ops::relu(x);
    if (cfg.downsample[b]) x = ops::avg_pool2(x);
  }
  return x;
}

Tensor encode(const Tensor& image, const TensorMap& params, const EncoderConfig& cfg) {
  Graph g;
  const Bindings bound = bind_params(g, params, false);
  return encode(g.constant(image), bound, cfg).value();
}

FeaturePair encode_pair(const Tensor& t0, const Tensor& t1, const TensorMap& params, const EncoderConfig& cfg) {
  if (t0.shape() != t1.shape()) {
    throw ShapeError("encode_pair: image shapes differ, " + to_string(t0.shape()) + " vs " + to_string(t1.shape()));
  }
  return FeaturePair{encode(t0, params, cfg), encode(t1, params, cfg)};
}

}  // namespace dascd
