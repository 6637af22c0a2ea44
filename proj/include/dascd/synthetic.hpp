#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dascd/dataset.hpp"

namespace dascd {

/// Bitemporal scene generator with known ground truth.
///
/// t0 is a smooth value-noise background with a few static objects. t1 is the
/// same scene with `n_shapes` objects inserted or removed (marked changed in
/// the label) and then a global photometric disturbance (brightness offset,
/// per-channel gain, pixel noise) that is never marked changed.
struct SyntheticConfig {
  std::size_t image_size = 32;
  std::size_t n_shapes = 2;
  std::size_t n_static = 2;
  bool rectangles = true;
  bool discs = true;
  double brightness = 0.15;  // |offset| drawn from [brightness/2, brightness]
  double gain = 0.15;        // per-channel gain drawn from 1 ± [0, gain]
  double noise = 0.02;       // Gaussian pixel noise sigma
  // Accepted changed-pixel fraction when n_shapes > 0.
  double min_changed = 0.02;
  double max_changed = 0.20;
  std::size_t max_attempts = 100;

  void validate() const;
};

struct SyntheticSample {
  ImagePair pair;
  LabelMap label;
};

/// Deterministic per (cfg, seed). Throws ContractError when no draw within
/// max_attempts lands in the changed-fraction band.
SyntheticSample generate_pair(const SyntheticConfig& cfg, std::uint64_t seed);

/// `count` samples whose seeds derive from (seed, stream, index).
std::vector<Sample> generate_samples(const SyntheticConfig& cfg, std::uint64_t seed, std::uint64_t stream,
                                     std::size_t count);

/// Writes PNGs under dir/{train,val,test}/ and dir/manifest.tsv; returns the manifest path.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticConfig& cfg,
                                              std::uint64_t seed, std::size_t n_train, std::size_t n_val,
                                              std::size_t n_test);

/// Seed streams used for the train/val/test splits and pseudo-change probes.
enum SeedStream : std::uint64_t {
  kStreamTrain = 1,
  kStreamVal = 2,
  kStreamTest = 3,
  kStreamPseudo = 4,
  kStreamInit = 10,
  kStreamShuffle = 11,
  kStreamGradcheck = 12,
};

}  // namespace dascd
