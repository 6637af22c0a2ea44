#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "dascd/config.hpp"
#include "dascd/dataset.hpp"

namespace dascd {

/// Siamese encoder + dual attention, with the parameters of one run.
struct Model {
  RunConfig config;
  TensorMap params;
};

/// Encoder and attention parameters drawn from the run seed (η = γ = 0).
Model init_model(const RunConfig& cfg);

/// Distance maps of one image pair at feature resolution. The attention-stage
/// maps are present only when that module is switched on.
struct PairDistances {
  std::optional<Var> spatial;
  std::optional<Var> channel;
  Var fused;
};

PairDistances forward_pair(const Bindings& params, const RunConfig& cfg, Var t0, Var t1);

struct LossParts {
  double l_sa = 0.0;
  double l_ca = 0.0;
  double l_e = 0.0;
  double total = 0.0;
};

/// Deep-supervised loss λ1·L_sa + λ2·L_ca + λ3·L_e for one pair. Terms for
/// switched-off attention modules are dropped. `labels` are at feature resolution.
Var pair_loss(const PairDistances& d, const LabelMap& labels, const RunConfig& cfg, LossParts* parts = nullptr);

/// Final distance map at feature resolution.
Tensor distance_map(const Model& model, const Tensor& t0, const Tensor& t1);

/// Labels reduced to the encoder's output grid.
LabelMap feature_labels(const LabelMap& labels, const EncoderConfig& enc);

struct Checkpoint {
  RunConfig config;
  TensorMap params;
  std::size_t epoch = 0;
  std::vector<double> loss_history;  // mean training loss per epoch

  Model model() const { return Model{config, params}; }
};

/// Checkpoints are DASCD1 archives: the parameters under their own names plus
/// "meta.config" (configuration text, one byte per element), "meta.epoch" and
/// "meta.loss_history".
TensorMap to_archive(const Checkpoint& ckpt);
Checkpoint from_archive(const TensorMap& archive);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dascd
