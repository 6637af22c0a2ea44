#include "dascd/model.hpp"

#include <cmath>

#include "dascd/ops.hpp"

namespace dascd {

namespace {

constexpr const char* kMetaConfig = "meta.config";
constexpr const char* kMetaEpoch = "meta.epoch";
constexpr const char* kMetaLoss = "meta.loss_history";

}  // namespace

Model init_model(const RunConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, kStreamInit));
  Model m{cfg, init_encoder(cfg.encoder, rng)};
  m.params.merge(init_attention(cfg.encoder.out_channels(), rng));
  return m;
}

PairDistances forward_pair(const Bindings& params, const RunConfig& cfg, Var t0, Var t1) {
  const Var f0 = encode(t0, params, cfg.encoder);
  const Var f1 = encode(t1, params, cfg.encoder);
  const DualAttentionVars att = dual_attention_pair(f0, f1, params, cfg.attention);
  PairDistances d;
  if (cfg.attention.spatial) d.spatial = pixel_distance(att.t0.fsa, att.t1.fsa, cfg.metric);
  if (cfg.attention.channel) d.channel = pixel_distance(att.t0.fca, att.t1.fca, cfg.metric);
  d.fused = pixel_distance(att.t0.fused, att.t1.fused, cfg.metric);
  return d;
}

Var pair_loss(const PairDistances& d, const LabelMap& labels, const RunConfig& cfg, LossParts* parts) {
  auto term = [&](Var dist) {
    return cfg.loss == LossKind::wdmc ? wdmc_loss(dist, labels, cfg.loss_cfg)
                                      : contrastive_loss(dist, labels, cfg.loss_cfg.m2, cfg.loss_cfg.reduction);
  };
  std::vector<Var> terms;
  std::vector<double> weights;
  LossParts p;
  if (d.spatial) {
    terms.push_back(term(*d.spatial));
    weights.push_back(cfg.loss_cfg.lambda1);
    p.l_sa = terms.back().value()[0];
  }
  if (d.channel) {
    terms.push_back(term(*d.channel));
    weights.push_back(cfg.loss_cfg.lambda2);
    p.l_ca = terms.back().value()[0];
  }
  terms.push_back(term(d.fused));
  weights.push_back(cfg.loss_cfg.lambda3);
  p.l_e = terms.back().value()[0];
  Var total = ops::weighted_sum(terms, weights);
  p.total = total.value()[0];
  if (parts) *parts = p;
  return total;
}

Tensor distance_map(const Model& model, const Tensor& t0, const Tensor& t1) {
  if (t0.shape() != t1.shape()) {
    throw ShapeError("image shapes differ, " + to_string(t0.shape()) + " vs " + to_string(t1.shape()));
  }
  Graph g;
  const Bindings params = bind_params(g, model.params, false);
  return forward_pair(params, model.config, g.constant(t0), g.constant(t1)).fused.value();
}

LabelMap feature_labels(const LabelMap& labels, const EncoderConfig& enc) {
  return downsample_majority(labels, enc.stride());
}

TensorMap to_archive(const Checkpoint& ckpt) {
  TensorMap archive = ckpt.params;
  const std::string text = to_text(ckpt.config);
  const Shape shape{text.size()};
  archive.insert_or_assign(kMetaConfig, Tensor(shape, std::vector<double>(text.begin(), text.end())));
  archive.insert_or_assign(kMetaEpoch, Tensor::scalar(static_cast<double>(ckpt.epoch)));
  if (!ckpt.loss_history.empty()) {
    archive.insert_or_assign(kMetaLoss, Tensor(Shape{ckpt.loss_history.size()}, ckpt.loss_history));
  }
  return archive;
}

Checkpoint from_archive(const TensorMap& archive) {
  Checkpoint ckpt;
  const Tensor& text = lookup(archive, kMetaConfig);
  std::string cfg;
  cfg.reserve(text.size());
  for (double v : text.data()) {
    if (v < 0 || v > 255 || v != std::floor(v)) throw ArchiveError("corrupt checkpoint configuration");
    cfg.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  ckpt.config = parse_config(cfg);
  ckpt.epoch = static_cast<std::size_t>(lookup(archive, kMetaEpoch).item());
  if (auto it = archive.find(kMetaLoss); it != archive.end()) {
    ckpt.loss_history.assign(it->second.data().begin(), it->second.data().end());
  }
  for (const auto& [name, t] : archive) {
    if (name.rfind("meta.", 0) != 0) ckpt.params.emplace(name, t);
  }
  // Parameter names and shapes must match what the configuration builds.
  const Model expected = init_model(ckpt.config);
  for (const auto& [name, t] : expected.params) {
    const auto it = ckpt.params.find(name);
    if (it == ckpt.params.end()) throw ArchiveError("checkpoint lacks parameter '" + name + "'");
    if (it->second.shape() != t.shape()) {
      throw ArchiveError("checkpoint parameter '" + name + "' has shape " + to_string(it->second.shape()) +
                         ", configuration needs " + to_string(t.shape()));
    }
  }
  if (ckpt.params.size() != expected.params.size()) throw ArchiveError("checkpoint has unexpected parameters");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) { save_archive(path, to_archive(ckpt)); }

Checkpoint load_checkpoint(const std::filesystem::path& path) { return from_archive(load_archive(path)); }

}  // namespace dascd
