#pragma once

#include <cstdint>
#include <string_view>

#include "dascd/autograd.hpp"
#include "dascd/binary_map.hpp"

namespace dascd {

enum class DistanceMetric { l2, cosine };
enum class Reduction { sum, mean };

DistanceMetric parse_metric(std::string_view s);
std::string_view to_string(DistanceMetric m) noexcept;

/// Margins, class weights and deep-supervision weights.
struct LossConfig {
  double m1 = 0.3;  // unchanged pairs are free below this distance
  double m2 = 2.2;  // changed pairs are free beyond this distance
  double w1 = 1.0;  // unchanged-pair weight
  double w2 = 1.0;  // changed-pair weight
  double lambda1 = 1.0;  // spatial-attention supervision
  double lambda2 = 1.0;  // channel-attention supervision
  double lambda3 = 1.0;  // final-output supervision
  Reduction reduction = Reduction::mean;

  void validate() const;
};

/// Per-pixel distance between the two dates' C-dimensional feature vectors.
///
/// l2:     ‖f0 − f1‖₂
/// cosine: 1 − cos(f0, f1), in [0, 2]; a zero vector on either side gives 1
///         (treated as orthogonal) with zero gradient.
Var pixel_distance(Var f0, Var f1, DistanceMetric metric);
Tensor pixel_distance(const Tensor& f0, const Tensor& f1, DistanceMetric metric);

/// Σ ½[(1−y)·d² + y·max(m − d, 0)²]
Var contrastive_loss(Var distances, const LabelMap& labels, double margin, Reduction reduction);
double contrastive_loss(const Tensor& distances, const LabelMap& labels, double margin,
                        Reduction reduction = Reduction::sum);

/// Σ ½[w1·(1−y)·max(d − m1, 0)² + w2·y·max(m2 − d, 0)²]
Var wdmc_loss(Var distances, const LabelMap& labels, const LossConfig& cfg);
double wdmc_loss(const Tensor& distances, const LabelMap& labels, const LossConfig& cfg);

struct ClassWeights {
  double w1;  // unchanged
  double w2;  // changed
};

/// Inverse class frequencies: w1 = 1/P_unchanged, w2 = 1/P_changed.
/// Throws ContractError when either count is zero.
ClassWeights class_weights(std::uint64_t n_changed, std::uint64_t n_unchanged);

/// λ1·L_sa + λ2·L_ca + λ3·L_e
double total_loss(double l_sa, double l_ca, double l_e, const LossConfig& cfg) noexcept;

}  // namespace dascd
