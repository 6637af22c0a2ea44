#include "dascd/attention.hpp"

#include "dascd/ops.hpp"

namespace dascd {

namespace {

void require_feature_map(const Tensor& f, const char* what) {
  if (f.rank() != 3) throw ShapeError(std::string(what) + ": expected C×H×W features, got " + to_string(f.shape()));
}

Var as_matrix(Var projection, std::size_t channels) {
  const Shape expected{channels, channels, 1, 1};
  if (projection.shape() != expected) {
    throw ShapeError("attention projection must be " + to_string(expected) + ", got " + to_string(projection.shape()));
  }
  return ops::reshape(projection, Shape{channels, channels});
}

}  // namespace

SpatialAttentionParams SpatialAttentionParams::init(std::size_t channels, Rng& rng) {
  SpatialAttentionParams p;
  p.proj_a = he_normal(Shape{channels, channels, 1, 1}, channels, rng);
  p.proj_b = he_normal(Shape{channels, channels, 1, 1}, channels, rng);
  p.proj_c = he_normal(Shape{channels, channels, 1, 1}, channels, rng);
  return p;
}

TensorMap init_attention(std::size_t channels, Rng& rng) {
  auto sa = SpatialAttentionParams::init(channels, rng);
  TensorMap params;
  params.emplace(kSpatialProjA, std::move(sa.proj_a));
  params.emplace(kSpatialProjB, std::move(sa.proj_b));
  params.emplace(kSpatialProjC, std::move(sa.proj_c));
  params.emplace(kSpatialEta, Tensor::scalar(0.0));
  params.emplace(kChannelGamma, Tensor::scalar(0.0));
  return params;
}

SpatialAttentionVars spatial_attention(Var features, Var proj_a, Var proj_b, Var proj_c, Var eta) {
  require_feature_map(features.value(), "spatial_attention");
  const Shape shape = features.shape();
  const std::size_t c = shape[0], n = shape[1] * shape[2];
  const Var f = ops::reshape(features, Shape{c, n});
  const Var fa = ops::matmul(as_matrix(proj_a, c), f);
  const Var fb = ops::matmul(as_matrix(proj_b, c), f);
  const Var fc = ops::matmul(as_matrix(proj_c, c), f);
  // energy[j][i] = Fb_j · Fa_i
  const Var fs = ops::softmax_rows(ops::matmul(ops::transpose(fb), fa));
  // context[c][j] = Σ_i Fc[c][i]·Fs[j][i]
  const Var context = ops::reshape(ops::matmul(fc, ops::transpose(fs)), shape);
  return {ops::add(ops::scale_by(eta, context), features), fs};
}

ChannelAttentionVars channel_attention(Var features, Var gamma) {
  require_feature_map(features.value(), "channel_attention");
  const Shape shape = features.shape();
  const std::size_t c = shape[0], n = shape[1] * shape[2];
  const Var f = ops::reshape(features, Shape{c, n});
  const Var fx = ops::softmax_rows(ops::matmul(f, ops::transpose(f)));
  const Var context = ops::reshape(ops::matmul(fx, f), shape);
  return {ops::add(ops::scale_by(gamma, context), features), fx};
}

Var fuse(Var fsa, Var fca, Var features) { return ops::sub(ops::add(fsa, fca), features); }

Tensor fuse(const Tensor& fsa, const Tensor& fca, const Tensor& features) {
  Graph g;
  return fuse(g.constant(fsa), g.constant(fca), g.constant(features)).value();
}

namespace {

BranchAttention attend(Var f, const Bindings& params, AttentionSwitches switches) {
  BranchAttention out{f, f, f, std::nullopt, std::nullopt};
  if (switches.spatial) {
    auto sa = spatial_attention(f, lookup(params, kSpatialProjA), lookup(params, kSpatialProjB),
                                lookup(params, kSpatialProjC), lookup(params, kSpatialEta));
    out.fsa = sa.out;
    out.fs = sa.map;
  }
  if (switches.channel) {
    auto ca = channel_attention(f, lookup(params, kChannelGamma));
    out.fca = ca.out;
    out.fx = ca.map;
  }
  out.fused = fuse(out.fsa, out.fca, f);
  return out;
}

}  // namespace

DualAttentionVars dual_attention_pair(Var f_t0, Var f_t1, const Bindings& params, AttentionSwitches switches) {
  if (f_t0.shape() != f_t1.shape()) {
    throw ShapeError("dual_attention_pair: branch shapes differ, " + to_string(f_t0.shape()) + " vs " +
                     to_string(f_t1.shape()));
  }
  return {attend(f_t0, params, switches), attend(f_t1, params, switches)};
}

std::pair<Tensor, Tensor> spatial_attention(const Tensor& features, const SpatialAttentionParams& params) {
  Graph g;
  auto r = spatial_attention(g.constant(features), g.constant(params.proj_a), g.constant(params.proj_b),
                             g.constant(params.proj_c), g.constant(Tensor::scalar(params.eta)));
  return {r.out.value(), r.map.value()};
}

std::pair<Tensor, Tensor> channel_attention(const Tensor& features, const ChannelAttentionParams& params) {
  Graph g;
  auto r = channel_attention(g.constant(features), g.constant(Tensor::scalar(params.gamma)));
  return {r.out.value(), r.map.value()};
}

}  // namespace dascd
