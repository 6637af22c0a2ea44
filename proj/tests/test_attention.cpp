#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "dascd/attention.hpp"
#include "dascd/gradcheck.hpp"
#include "dascd/ops.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dascd;
using dascd::test::max_abs_diff;
using dascd::test::random_tensor;

namespace {

SpatialAttentionParams random_spatial(std::size_t c, std::mt19937_64& rng, double eta) {
  SpatialAttentionParams p;
  p.proj_a = random_tensor({c, c, 1, 1}, rng);
  p.proj_b = random_tensor({c, c, 1, 1}, rng);
  p.proj_c = random_tensor({c, c, 1, 1}, rng);
  p.eta = eta;
  return p;
}

void expect_rows_are_distributions(const Tensor& m) {
  for (std::size_t r = 0; r < m.dim(0); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.dim(1); ++c) {
      EXPECT_GE(m.at(r, c), 0.0);
      EXPECT_LE(m.at(r, c), 1.0);
      s += m.at(r, c);
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

}  // namespace

TEST(SpatialAttention, InitialisedParams) {
  Rng rng(1);
  const TensorMap p = init_attention(8, rng);
  EXPECT_EQ(p.at(kSpatialEta).item(), 0.0);
  EXPECT_EQ(p.at(kChannelGamma).item(), 0.0);
  EXPECT_EQ(p.at(kSpatialProjA).shape(), (Shape{8, 8, 1, 1}));
  EXPECT_NE(p.at(kSpatialProjA), p.at(kSpatialProjB));
  EXPECT_NE(p.at(kSpatialProjB), p.at(kSpatialProjC));
  // Channel attention owns nothing but γ.
  std::size_t channel_params = 0;
  for (const auto& [name, t] : p) channel_params += name.rfind("att.ca.", 0) == 0 ? 1 : 0;
  EXPECT_EQ(channel_params, 1u);
}

TEST(SpatialAttention, ZeroEtaIsIdentity) {
  std::mt19937_64 rng(2);
  const Tensor f = random_tensor({4, 5, 3}, rng, -5, 5);
  EXPECT_EQ(spatial_attention(f, random_spatial(4, rng, 0.0)).first, f);
}

TEST(SpatialAttention, SinglePosition) {
  std::mt19937_64 rng(3);
  const Tensor f = random_tensor({3, 1, 1}, rng);
  const auto p = random_spatial(3, rng, 0.7);
  const auto [out, fs] = spatial_attention(f, p);
  EXPECT_EQ(fs, Tensor(Shape{1, 1}, 1.0));
  const Tensor fc = ops::matmul(p.proj_c.reshaped({3, 3}), f.reshaped({3, 1}));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out[c], 0.7 * fc[c] + f[c], 1e-15);
}

TEST(SpatialAttention, MatchesLoopOracle) {
  std::mt19937_64 rng(4);
  for (const Shape& s : {Shape{2, 2, 2}, Shape{3, 4, 5}, Shape{4, 6, 6}}) {
    const Tensor f = random_tensor(s, rng);
    const auto p = random_spatial(s[0], rng, 1.0);
    const auto [out, fs] = spatial_attention(f, p);
    const auto [ref, ref_fs] = oracle::spatial_attention(f, p.proj_a, p.proj_b, p.proj_c, 1.0);
    EXPECT_LT(max_abs_diff(out, ref), 1e-10) << to_string(s);
    EXPECT_LT(max_abs_diff(fs, ref_fs), 1e-10) << to_string(s);
  }
}

TEST(SpatialAttention, MapRowsAreDistributions) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const Tensor f = random_tensor({3, 4, 4}, rng, -10, 10);
    expect_rows_are_distributions(spatial_attention(f, random_spatial(3, rng, 0.5)).second);
  }
}

TEST(ChannelAttention, ZeroGammaIsIdentity) {
  std::mt19937_64 rng(6);
  const Tensor f = random_tensor({5, 3, 3}, rng, -5, 5);
  EXPECT_EQ(channel_attention(f, ChannelAttentionParams{0.0}).first, f);
}

TEST(ChannelAttention, SingleChannel) {
  std::mt19937_64 rng(7);
  const Tensor f = random_tensor({1, 3, 4}, rng);
  const auto [out, fx] = channel_attention(f, ChannelAttentionParams{0.4});
  EXPECT_EQ(fx, Tensor(Shape{1, 1}, 1.0));
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(out[i], 1.4 * f[i], 1e-15);
}

TEST(ChannelAttention, MatchesLoopOracle) {
  std::mt19937_64 rng(8);
  for (const Shape& s : {Shape{3, 2, 2}, Shape{4, 6, 6}, Shape{2, 3, 5}}) {
    const Tensor f = random_tensor(s, rng);
    const auto [out, fx] = channel_attention(f, ChannelAttentionParams{1.0});
    const auto [ref, ref_fx] = oracle::channel_attention(f, 1.0);
    EXPECT_LT(max_abs_diff(out, ref), 1e-10);
    EXPECT_LT(max_abs_diff(fx, ref_fx), 1e-10);
    expect_rows_are_distributions(fx);
  }
}

TEST(ChannelAttention, PositionPermutationEquivariance) {
  std::mt19937_64 rng(9);
  const std::size_t c = 3, h = 3, w = 4, n = h * w;
  const Tensor f = random_tensor({c, h, w}, rng);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor g(f.shape());
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t p = 0; p < n; ++p) g[k * n + p] = f[k * n + perm[p]];
  const auto [out_f, fx_f] = channel_attention(f, ChannelAttentionParams{0.8});
  const auto [out_g, fx_g] = channel_attention(g, ChannelAttentionParams{0.8});
  EXPECT_LT(max_abs_diff(fx_f, fx_g), 1e-12);
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t p = 0; p < n; ++p) EXPECT_NEAR(out_g[k * n + p], out_f[k * n + perm[p]], 1e-12);
}

TEST(Fuse, Examples) {
  std::mt19937_64 rng(10);
  const Tensor x = random_tensor({2, 3, 3}, rng), y = random_tensor({2, 3, 3}, rng), f = random_tensor({2, 3, 3}, rng);
  const Tensor zero(Shape{2, 3, 3}, 0.0);
  // With F = 0 the aggregate reduces to the plain sum Fsa + Fca.
  EXPECT_EQ(fuse(x, zero, zero), x);
  const Tensor twice = fuse(x, x, zero);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(twice[i], 2 * x[i]);
  const Tensor r = fuse(x, y, f);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(r[i], (x[i] + y[i]) - f[i]);
  // Both modules at identity: the aggregate is F itself.
  EXPECT_EQ(fuse(f, f, f), f);
  EXPECT_THROW(fuse(x, Tensor(Shape{2, 9}), f), ShapeError);
}

namespace {

struct DualFixture {
  TensorMap params;
  Tensor f0, f1;
};

DualFixture make_dual(std::mt19937_64& rng, double eta, double gamma) {
  Rng init(rng());
  DualFixture d{init_attention(3, init), random_tensor({3, 3, 4}, rng), random_tensor({3, 3, 4}, rng)};
  d.params.at(kSpatialEta)[0] = eta;
  d.params.at(kChannelGamma)[0] = gamma;
  return d;
}

}  // namespace

TEST(DualAttention, IdentityAtInit) {
  std::mt19937_64 rng(11);
  const DualFixture d = make_dual(rng, 0.0, 0.0);
  Graph g;
  const auto r = dual_attention_pair(g.constant(d.f0), g.constant(d.f1), bind_params(g, d.params, false), {});
  EXPECT_EQ(r.t0.fused.value(), d.f0);
  EXPECT_EQ(r.t1.fused.value(), d.f1);
}

TEST(DualAttention, SharedParametersAndComposition) {
  std::mt19937_64 rng(12);
  const DualFixture d = make_dual(rng, 0.6, -0.4);
  Graph g;
  const Bindings b = bind_params(g, d.params, false);
  const auto same = dual_attention_pair(g.constant(d.f0), g.constant(d.f0), b, {});
  EXPECT_EQ(same.t0.fused.value(), same.t1.fused.value());

  const auto r = dual_attention_pair(g.constant(d.f0), g.constant(d.f1), b, {});
  SpatialAttentionParams sp{d.params.at(kSpatialProjA), d.params.at(kSpatialProjB), d.params.at(kSpatialProjC), 0.6};
  for (const auto& [f, branch] : {std::pair{d.f0, r.t0}, std::pair{d.f1, r.t1}}) {
    const Tensor fsa = spatial_attention(f, sp).first;
    const Tensor fca = channel_attention(f, ChannelAttentionParams{-0.4}).first;
    EXPECT_EQ(branch.fsa.value(), fsa);
    EXPECT_EQ(branch.fca.value(), fca);
    EXPECT_EQ(branch.fused.value(), fuse(fsa, fca, f));
  }
}

TEST(DualAttention, SwitchesOff) {
  std::mt19937_64 rng(13);
  const DualFixture d = make_dual(rng, 0.6, 0.3);
  Graph g;
  const auto r = dual_attention_pair(g.constant(d.f0), g.constant(d.f1), bind_params(g, d.params, false),
                                     AttentionSwitches{false, false});
  EXPECT_EQ(r.t0.fused.value(), d.f0);
  EXPECT_FALSE(r.t0.fs.has_value());
  EXPECT_FALSE(r.t0.fx.has_value());
}

TEST(DualAttention, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    Rng init(rng());
    const DualFixture d{init_attention(2, init), random_tensor({2, 3, 3}, rng), random_tensor({2, 3, 3}, rng)};
    TensorMap params = d.params;
    params.at(kSpatialEta)[0] = 0.5;
    params.at(kChannelGamma)[0] = 0.7;
    const Tensor probe = random_tensor({2, 3, 3}, rng);

    auto loss = [&](Graph& g, const Bindings& b, Var f0, Var f1) {
      const auto r = dual_attention_pair(f0, f1, b, {});
      const Var diff = ops::sub(r.t0.fused, r.t1.fused);
      return ops::add(ops::sum(ops::mul(diff, diff)), ops::sum(ops::mul(r.t0.fsa, g.constant(probe))));
    };
    Graph g;
    const Bindings b = bind_params(g, params, true);
    const Var f0 = g.parameter(d.f0);
    g.backward(loss(g, b, f0, g.constant(d.f1)));

    for (const auto& [name, t] : params) {
      const Tensor numeric = finite_difference_grad(
          [&](const Tensor& x) {
            TensorMap q = params;
            q.at(name) = x;
            Graph h;
            return loss(h, bind_params(h, q, false), h.constant(d.f0), h.constant(d.f1)).value();
          },
          t);
      const Tensor analytic = g.grad(lookup(b, name));
      for (std::size_t i = 0; i < t.size(); ++i)
        EXPECT_TRUE(gradients_agree(analytic[i], numeric[i], 1e-4, 1e-8)) << name << "[" << i << "]";
    }
    const Tensor numeric_f = finite_difference_grad(
        [&](const Tensor& x) {
          Graph h;
          return loss(h, bind_params(h, params, false), h.constant(x), h.constant(d.f1)).value();
        },
        d.f0);
    const Tensor analytic_f = g.grad(f0);
    for (std::size_t i = 0; i < d.f0.size(); ++i)
      EXPECT_TRUE(gradients_agree(analytic_f[i], numeric_f[i], 1e-4, 1e-8)) << "F[" << i << "]";
  }
}
