#pragma once

#include <optional>
#include <utility>

#include "dascd/params.hpp"

namespace dascd {

// Parameter names in checkpoints.
inline constexpr const char* kSpatialProjA = "att.sa.a.w";
inline constexpr const char* kSpatialProjB = "att.sa.b.w";
inline constexpr const char* kSpatialProjC = "att.sa.c.w";
inline constexpr const char* kSpatialEta = "att.sa.eta";
inline constexpr const char* kChannelGamma = "att.ca.gamma";

/// Three independent C→C 1×1 projections plus the learnable output scale η.
struct SpatialAttentionParams {
  Tensor proj_a;  // C×C×1×1
  Tensor proj_b;
  Tensor proj_c;
  double eta = 0.0;

  static SpatialAttentionParams init(std::size_t channels, Rng& rng);
};

/// Channel attention has no projections; only the output scale γ.
struct ChannelAttentionParams {
  double gamma = 0.0;
};

struct AttentionSwitches {
  bool spatial = true;
  bool channel = true;
};

/// η = γ = 0 and He-initialized projections.
TensorMap init_attention(std::size_t channels, Rng& rng);

struct SpatialAttentionVars {
  Var out;  // Fsa, C×H×W
  Var map;  // Fs, N×N with N = H·W; row j is the distribution over source positions i
};

struct ChannelAttentionVars {
  Var out;  // Fca, C×H×W
  Var map;  // Fx, C×C; row j is the distribution over source channels i
};

/// Fsa_j = η·Σ_i Fs[j][i]·Fc_i + F_j with Fs[j][i] = softmax_i(Fa_i·Fb_j).
SpatialAttentionVars spatial_attention(Var features, Var proj_a, Var proj_b, Var proj_c, Var eta);
/// Fca_j = γ·Σ_i Fx[j][i]·F_i + F_j with Fx[j][i] = softmax_i(F_i·F_j) over flattened channels.
ChannelAttentionVars channel_attention(Var features, Var gamma);

/// Aggregates the two attention outputs as Fsa + Fca − F, which is F itself
/// when both modules are at their η = γ = 0 initialization.
Var fuse(Var fsa, Var fca, Var features);
Tensor fuse(const Tensor& fsa, const Tensor& fca, const Tensor& features);

struct BranchAttention {
  Var fsa;    // equals the input when spatial attention is switched off
  Var fca;    // equals the input when channel attention is switched off
  Var fused;
  std::optional<Var> fs;
  std::optional<Var> fx;
};

struct DualAttentionVars {
  BranchAttention t0;
  BranchAttention t1;
};

/// Applies the same attention parameters to both dates.
DualAttentionVars dual_attention_pair(Var f_t0, Var f_t1, const Bindings& params, AttentionSwitches switches);

// Tensor-level conveniences.
std::pair<Tensor, Tensor> spatial_attention(const Tensor& features, const SpatialAttentionParams& params);
std::pair<Tensor, Tensor> channel_attention(const Tensor& features, const ChannelAttentionParams& params);

}  // namespace dascd
