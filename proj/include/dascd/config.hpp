#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "dascd/attention.hpp"
#include "dascd/encoder.hpp"
#include "dascd/losses.hpp"
#include "dascd/synthetic.hpp"

namespace dascd {

enum class LossKind { contrastive, wdmc };
enum class WeightMode { dataset, manual };

/// Everything a run needs. Every field has a default, so an empty
/// configuration trains on in-memory synthetic data.
struct RunConfig {
  EncoderConfig encoder;
  AttentionSwitches attention;
  LossKind loss = LossKind::wdmc;
  DistanceMetric metric = DistanceMetric::l2;
  LossConfig loss_cfg;
  // dataset: w1/w2 are recomputed from training labels when training starts
  // (and the resolved values are what a checkpoint stores).
  WeightMode weight_mode = WeightMode::dataset;
  double lr = 1e-4;
  std::size_t batch_size = 4;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  std::optional<double> threshold;  // empty: midpoint of the loss's margin band

  SyntheticConfig synthetic;
  std::size_t n_train = 200;
  std::size_t n_val = 25;
  std::size_t n_test = 25;
  std::string manifest;  // empty: generate data in memory from `synthetic`

  void validate() const;

  /// Distance above which a pixel is called changed. Defaults to the middle of
  /// the band the loss leaves free: (m1 + m2)/2 for WDMC and m/2 for the
  /// contrastive loss, whose margin is m2.
  double decision_threshold() const;
};

/// Applies one `key=value` setting. Throws ContractError for unknown keys or bad values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);
/// Parses `key=value` lines ('#' starts a comment) on top of `base`.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
/// Full configuration as `key=value` lines; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& cfg);

}  // namespace dascd
