#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dascd/metrics.hpp"
#include "dascd/model.hpp"

namespace dascd {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates per parameter plus the step counter.
struct AdamState {
  TensorMap m;
  TensorMap v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update. Moments for a parameter start at zero the
/// first time it is seen.
void adam_step(TensorMap& params, const TensorMap& grads, AdamState& state, const AdamOptions& opt);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Called after every epoch with (epoch index, mean batch loss).
using EpochObserver = std::function<void(std::size_t, double)>;

/// Training samples for the configuration: the manifest's train split, or
/// n_train synthetic pairs when no manifest is set.
std::vector<Sample> training_data(const RunConfig& cfg);
/// Evaluation samples for a split (synthetic streams when no manifest is set).
std::vector<Sample> split_data(const RunConfig& cfg, Split split);

/// Resolves dataset-mode class weights from the samples' feature-resolution labels.
RunConfig resolve_class_weights(const RunConfig& cfg, const std::vector<Sample>& train_set);

/// Adam over shuffled mini-batches. Deterministic per cfg.seed.
/// Throws TrainingError (naming the batch and loss components) on a non-finite loss.
Checkpoint train(const RunConfig& cfg, const std::vector<Sample>& train_set, const EpochObserver& observer = {});

/// Per-image distance maps at feature resolution, evaluated in parallel.
std::vector<Tensor> distance_maps(const Model& model, const std::vector<Sample>& samples);

struct Evaluation {
  MetricsReport overall;  // counts summed over all images, then metrics
  std::vector<MetricsReport> per_image;
};

/// Thresholds each image's distance map and compares it with the label at
/// feature resolution. Throws ContractError for an empty sample list.
Evaluation evaluate(const Model& model, const std::vector<Sample>& samples, double threshold);
Evaluation evaluate(const Model& model, const std::vector<Sample>& samples);

struct Prediction {
  Tensor distance;       // feature resolution
  Tensor distance_full;  // nearest-neighbour enlarged to the input size
  ChangeMap change;      // threshold(distance_full, t)
  double threshold = 0.0;
};

Prediction predict(const Model& model, const Tensor& t0, const Tensor& t1, double threshold);

struct ProbeResult {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  bool ok = false;
};

struct GradcheckOptions {
  std::size_t probes = 50;
  double step = 1e-5;
  double rel_tol = 1e-4;
  double abs_tol = 1e-8;
  std::size_t image_size = 16;
  std::size_t samples = 2;
};

struct GradcheckReport {
  std::vector<ProbeResult> probes;
  /// Largest relative error among probes with a live gradient (either side
  /// above abs_tol in magnitude). Dead-gradient probes pass on abs_tol alone.
  double max_error = 0.0;
  bool passed = false;
};

/// Backward pass vs central differences on randomly probed parameters,
/// through encoder, both attention modules and the configured loss. The
/// attention scales are set away from zero so every parameter is live.
GradcheckReport gradcheck(const RunConfig& cfg, const GradcheckOptions& opt);

/// The same comparison for sum(W·X), whose gradient is exact.
GradcheckReport gradcheck_linear(std::uint64_t seed, const GradcheckOptions& opt);

}  // namespace dascd
