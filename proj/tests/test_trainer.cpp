#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "dascd/ops.hpp"
#include "dascd/trainer.hpp"
#include "support.hpp"

using namespace dascd;
namespace fs = std::filesystem;

namespace {

// Small enough to train in well under a second per epoch.
RunConfig tiny_config(std::uint64_t seed = 3) {
  RunConfig cfg;
  cfg.encoder.channels = {4, 8, 8};
  cfg.synthetic.image_size = 16;
  cfg.n_train = 8;
  cfg.n_val = 4;
  cfg.n_test = 4;
  cfg.epochs = 3;
  cfg.batch_size = 3;
  cfg.lr = 1e-3;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParameters) {
  TensorMap p{{"x", Tensor(Shape{3}, 1.5)}};
  const TensorMap g{{"x", Tensor(Shape{3}, 0.0)}};
  AdamState s;
  for (int i = 0; i < 5; ++i) adam_step(p, g, s, AdamOptions{0.1});
  EXPECT_EQ(p.at("x"), Tensor(Shape{3}, 1.5));
  EXPECT_EQ(s.m.at("x"), Tensor(Shape{3}, 0.0));
  EXPECT_EQ(s.v.at("x"), Tensor(Shape{3}, 0.0));
  EXPECT_EQ(s.step, 5u);
}

TEST(Adam, FirstStepMovesByAtMostLr) {
  for (double g : {1e-6, 0.3, -7.0, 1e4}) {
    TensorMap p{{"x", Tensor::scalar(2.0)}};
    AdamState s;
    adam_step(p, {{"x", Tensor::scalar(g)}}, s, AdamOptions{0.01});
    const double delta = std::abs(p.at("x").item() - 2.0);
    EXPECT_LE(delta, 0.01 * (1 + 1e-6));
    EXPECT_LT((p.at("x").item() - 2.0) * g, 0.0);
  }
}

TEST(Adam, MinimisesParabola) {
  TensorMap p{{"x", Tensor::scalar(1.0)}};
  AdamState s;
  // Scalar recursion transcribed directly as the oracle.
  double x = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 100; ++t) {
    adam_step(p, {{"x", Tensor::scalar(2.0 * p.at("x").item())}}, s, AdamOptions{0.1});
    const double g = 2.0 * x;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
  }
  EXPECT_LT(std::abs(p.at("x").item()), 0.05);
  EXPECT_NEAR(p.at("x").item(), x, 1e-12);
}

TEST(Config, DefaultsAndRoundTrip) {
  const RunConfig d;
  EXPECT_EQ(d.lr, 1e-4);
  EXPECT_EQ(d.batch_size, 4u);
  EXPECT_EQ(d.loss_cfg.m1, 0.3);
  EXPECT_EQ(d.loss_cfg.m2, 2.2);
  EXPECT_DOUBLE_EQ(d.decision_threshold(), 1.25);

  RunConfig c = parse_config(
      "# comment\nloss = contrastive\nmetric=cosine\nchannels=8,8\ndownsample=on,off\nlr=0.003\n"
      "spatial_attention=off\nthreshold=0.9\nshape_kinds=disc\nreduction=sum\n");
  EXPECT_EQ(c.loss, LossKind::contrastive);
  EXPECT_EQ(c.metric, DistanceMetric::cosine);
  EXPECT_EQ(c.encoder.channels, (std::vector<std::size_t>{8, 8}));
  EXPECT_FALSE(c.attention.spatial);
  EXPECT_EQ(c.decision_threshold(), 0.9);
  c.loss_cfg.w1 = 1.0 / 3.0;
  const RunConfig back = parse_config(to_text(c));
  EXPECT_EQ(to_text(back), to_text(c));
  EXPECT_EQ(back.loss_cfg.w1, 1.0 / 3.0);
  EXPECT_EQ(back.lr, 0.003);
  EXPECT_FALSE(back.synthetic.rectangles);

  RunConfig contrastive;
  contrastive.loss = LossKind::contrastive;
  EXPECT_DOUBLE_EQ(contrastive.decision_threshold(), 1.1);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("bogus=1"), ContractError);
  EXPECT_THROW(parse_config("lr"), ContractError);
  EXPECT_THROW(parse_config("lr=fast"), ContractError);
  EXPECT_THROW(parse_config("m1=3\nm2=2").validate(), ContractError);
  RunConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ContractError);
}

TEST(Model, InitialisationIsIdentityAtAttention) {
  const Model m = init_model(tiny_config());
  EXPECT_EQ(m.params.at(kSpatialEta).item(), 0.0);
  EXPECT_EQ(m.params.at(kChannelGamma).item(), 0.0);
  // A pair (I, I) has zero distance everywhere.
  const auto s = generate_samples(m.config.synthetic, 1, kStreamTest, 1);
  EXPECT_EQ(distance_map(m, s[0].t0, s[0].t0), Tensor(Shape{4, 4}, 0.0));
}

TEST(Model, DisabledModulesDropTheirTerms) {
  RunConfig cfg = tiny_config();
  cfg.attention = {false, true};
  const Model m = init_model(cfg);
  const auto s = generate_samples(cfg.synthetic, 1, kStreamTrain, 1);
  Graph g;
  const PairDistances d = forward_pair(bind_params(g, m.params, false), cfg, g.constant(s[0].t0), g.constant(s[0].t1));
  EXPECT_FALSE(d.spatial.has_value());
  ASSERT_TRUE(d.channel.has_value());
  LossParts parts;
  pair_loss(d, feature_labels(s[0].label, cfg.encoder), cfg, &parts);
  EXPECT_EQ(parts.l_sa, 0.0);
  EXPECT_DOUBLE_EQ(parts.total, parts.l_ca + parts.l_e);
}

TEST(Model, SupervisionWeightsWireGradients) {
  RunConfig cfg = tiny_config();
  Model m = init_model(cfg);
  m.params.at(kSpatialEta)[0] = 0.5;
  m.params.at(kChannelGamma)[0] = 0.4;
  const auto s = generate_samples(cfg.synthetic, 2, kStreamTrain, 1);
  const LabelMap y = feature_labels(s[0].label, cfg.encoder);

  auto grads = [&](double l1, double l2, double l3) {
    RunConfig c = cfg;
    c.loss_cfg.lambda1 = l1;
    c.loss_cfg.lambda2 = l2;
    c.loss_cfg.lambda3 = l3;
    Graph g;
    const Bindings b = bind_params(g, m.params, true);
    g.backward(pair_loss(forward_pair(b, c, g.constant(s[0].t0), g.constant(s[0].t1)), y, c));
    TensorMap out;
    for (const auto& [name, v] : b) out.emplace(name, g.grad(v));
    return out;
  };

  for (const auto& [name, t] : grads(0, 0, 0)) EXPECT_EQ(t, Tensor(t.shape(), 0.0)) << name;

  // With λ1 = λ2 = 0 everything flows through the fused output only.
  const TensorMap fused_only = grads(0, 0, 1);
  Graph g;
  const Bindings b = bind_params(g, m.params, true);
  const PairDistances d = forward_pair(b, cfg, g.constant(s[0].t0), g.constant(s[0].t1));
  g.backward(wdmc_loss(d.fused, y, cfg.loss_cfg));
  for (const auto& [name, v] : b) EXPECT_EQ(fused_only.at(name), g.grad(v)) << name;

  // Linear in λ: the full gradient is the sum of the three single-term gradients.
  const TensorMap all = grads(1, 1, 1), sa = grads(1, 0, 0), ca = grads(0, 1, 0);
  for (const auto& [name, t] : all)
    for (std::size_t i = 0; i < t.size(); ++i)
      EXPECT_NEAR(t[i], sa.at(name)[i] + ca.at(name)[i] + fused_only.at(name)[i], 1e-12 * (1 + std::abs(t[i])));
}

TEST(Train, ZeroEpochsReturnsInitialisation) {
  RunConfig cfg = tiny_config();
  cfg.epochs = 0;
  const Checkpoint ckpt = train(cfg, training_data(cfg));
  EXPECT_EQ(ckpt.params, init_model(ckpt.config).params);
  EXPECT_EQ(ckpt.epoch, 0u);
  EXPECT_TRUE(ckpt.loss_history.empty());
}

TEST(Train, DeterministicPerSeed) {
  const RunConfig cfg = tiny_config(4);
  const auto data = training_data(cfg);
  const Checkpoint a = train(cfg, data), b = train(cfg, data);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(to_text(a.config), to_text(b.config));
  RunConfig other = cfg;
  other.seed = 5;
  EXPECT_NE(train(other, data).params, a.params);
}

TEST(Train, DatasetModeResolvesClassWeights) {
  const RunConfig cfg = tiny_config();
  const auto data = training_data(cfg);
  const Checkpoint ckpt = train(cfg, data);
  PixelCounts counts;
  for (const auto& s : data) counts += count_pixels(feature_labels(s.label, cfg.encoder));
  const ClassWeights w = class_weights(counts.changed, counts.unchanged);
  EXPECT_EQ(ckpt.config.loss_cfg.w1, w.w1);
  EXPECT_EQ(ckpt.config.loss_cfg.w2, w.w2);
  EXPECT_GT(w.w2, w.w1);

  RunConfig manual = cfg;
  manual.weight_mode = WeightMode::manual;
  manual.loss_cfg.w2 = 2.5;
  EXPECT_EQ(train(manual, data).config.loss_cfg.w2, 2.5);
}

TEST(Train, LossDecreases) {
  RunConfig cfg = tiny_config(6);
  cfg.epochs = 8;
  cfg.n_train = 16;
  const Checkpoint ckpt = train(cfg, training_data(cfg));
  ASSERT_EQ(ckpt.loss_history.size(), 8u);
  EXPECT_LT(ckpt.loss_history.back(), ckpt.loss_history.front());
}

TEST(Train, NonFiniteLossIsReported) {
  RunConfig cfg = tiny_config();
  cfg.lr = 1e300;
  cfg.epochs = 4;
  try {
    train(cfg, training_data(cfg));
    FAIL() << "expected divergence";
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("L_e="), std::string::npos) << msg;
  }
}

TEST(Checkpoint, RoundTripPreservesEvaluation) {
  const RunConfig cfg = tiny_config(7);
  const Checkpoint ckpt = train(cfg, training_data(cfg));
  const fs::path p = fs::temp_directory_path() / "dascd_ckpt_roundtrip.dascd";
  save_checkpoint(p, ckpt);
  const Checkpoint back = load_checkpoint(p);
  fs::remove(p);
  EXPECT_EQ(back.params, ckpt.params);
  EXPECT_EQ(back.epoch, ckpt.epoch);
  EXPECT_EQ(back.loss_history, ckpt.loss_history);
  EXPECT_EQ(to_text(back.config), to_text(ckpt.config));
  const auto test = split_data(cfg, Split::test);
  EXPECT_EQ(evaluate(back.model(), test).overall, evaluate(ckpt.model(), test).overall);
}

TEST(Checkpoint, RejectsForeignArchives) {
  const Checkpoint ckpt = train([] {
    RunConfig c = tiny_config();
    c.epochs = 0;
    return c;
  }(), training_data(tiny_config()));
  TensorMap a = to_archive(ckpt);
  a.erase("att.sa.eta");
  EXPECT_ANY_THROW(from_archive(a));
  a = to_archive(ckpt);
  a.at("enc.block0.w") = Tensor(Shape{2, 2});
  EXPECT_ANY_THROW(from_archive(a));
}

TEST(Evaluate, OracleAndTrivialPredictors) {
  const RunConfig cfg = tiny_config();
  const auto test = split_data(cfg, Split::test);
  std::vector<Tensor> perfect, zero;
  std::vector<LabelMap> labels;
  ConfusionCounts truth;
  for (const auto& s : test) {
    const LabelMap y = feature_labels(s.label, cfg.encoder);
    Tensor d(Shape{y.height, y.width});
    for (std::size_t i = 0; i < y.size(); ++i) d[i] = y.values[i];
    perfect.push_back(d);
    zero.push_back(Tensor(d.shape(), 0.0));
    labels.push_back(y);
    truth.fn += y.count_ones();
    truth.tn += y.size() - y.count_ones();
  }
  const std::vector<double> grid{0.5};
  const MetricsReport best = threshold_sweep(perfect, labels, grid).rows[0].report;
  EXPECT_EQ(best.f1, 1.0);
  EXPECT_EQ(best.oa, 1.0);
  const MetricsReport none = threshold_sweep(zero, labels, grid).rows[0].report;
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_DOUBLE_EQ(none.oa, static_cast<double>(truth.tn) / static_cast<double>(truth.total()));

  EXPECT_THROW(evaluate(init_model(cfg), {}), ContractError);
}

TEST(Evaluate, MicroAveragedOverImages) {
  const RunConfig cfg = tiny_config(8);
  const Checkpoint ckpt = train(cfg, training_data(cfg));
  const auto test = split_data(cfg, Split::test);
  const Evaluation ev = evaluate(ckpt.model(), test, 0.7);
  ConfusionCounts sum;
  for (const auto& r : ev.per_image) sum += r.counts;
  EXPECT_EQ(ev.overall, metrics(sum));
}

TEST(Predict, ChangeMapIsThresholdedDistance) {
  const RunConfig cfg = tiny_config(9);
  const Checkpoint ckpt = train(cfg, training_data(cfg));
  const auto s = split_data(cfg, Split::test)[0];
  const Prediction p = predict(ckpt.model(), s.t0, s.t1, 0.8);
  EXPECT_EQ(p.distance.shape(), (Shape{4, 4}));
  EXPECT_EQ(p.distance_full.shape(), (Shape{16, 16}));
  EXPECT_EQ(p.change, threshold(p.distance_full, 0.8));
  EXPECT_EQ(p.distance, distance_map(ckpt.model(), s.t0, s.t1));
  EXPECT_THROW(predict(ckpt.model(), Tensor(Shape{3, 18, 16}), Tensor(Shape{3, 18, 16}), 0.8), ShapeError);
}

TEST(Gradcheck, LinearModelIsExact) {
  GradcheckOptions opt;
  opt.probes = 12;
  const GradcheckReport r = gradcheck_linear(1, opt);
  EXPECT_TRUE(r.passed);
  EXPECT_LT(r.max_error, 1e-8);
}

TEST(Gradcheck, FullPipelineAllVariants) {
  GradcheckOptions opt;
  opt.probes = 22;
  for (LossKind loss : {LossKind::wdmc, LossKind::contrastive})
    for (DistanceMetric metric : {DistanceMetric::l2, DistanceMetric::cosine}) {
      RunConfig cfg = tiny_config();
      cfg.loss = loss;
      cfg.metric = metric;
      const GradcheckReport r = gradcheck(cfg, opt);
      EXPECT_TRUE(r.passed) << to_string(metric);
      EXPECT_LT(r.max_error, 1e-4);
      EXPECT_EQ(r.probes.size(), 22u);
    }
}

TEST(Gradcheck, DeadHingeProbePassesOnAbsoluteFallback) {
  // With m1 huge every unchanged pixel sits inside its free zone and with
  // m2 tiny every changed pixel is beyond its margin: the loss is flat.
  RunConfig cfg = tiny_config();
  cfg.weight_mode = WeightMode::manual;
  cfg.loss_cfg.m1 = 1e3;
  cfg.loss_cfg.m2 = 1e3 + 1;
  cfg.synthetic.n_shapes = 0;
  GradcheckOptions opt;
  opt.probes = 11;
  const GradcheckReport r = gradcheck(cfg, opt);
  EXPECT_TRUE(r.passed);
  for (const auto& p : r.probes) {
    EXPECT_EQ(p.analytic, 0.0);
    EXPECT_LE(std::abs(p.numeric), 1e-8);
  }
}
