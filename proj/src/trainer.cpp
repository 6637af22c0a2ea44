#include "dascd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dascd/gradcheck.hpp"
#include "dascd/ops.hpp"

namespace dascd {

void adam_step(TensorMap& params, const TensorMap& grads, AdamState& state, const AdamOptions& opt) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (auto& [name, p] : params) {
    const auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    require_same_shape(p, g, "adam_step");
    auto [mit, m_new] = state.m.try_emplace(name, p.shape(), 0.0);
    auto [vit, v_new] = state.v.try_emplace(name, p.shape(), 0.0);
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
    }
  }
}

std::vector<Sample> training_data(const RunConfig& cfg) { return split_data(cfg, Split::train); }

std::vector<Sample> split_data(const RunConfig& cfg, Split split) {
  if (!cfg.manifest.empty()) {
    std::vector<Sample> out;
    for (const auto& e : select(read_manifest(cfg.manifest), split)) out.push_back(load_pair(e));
    return out;
  }
  switch (split) {
    case Split::train: return generate_samples(cfg.synthetic, cfg.seed, kStreamTrain, cfg.n_train);
    case Split::val: return generate_samples(cfg.synthetic, cfg.seed, kStreamVal, cfg.n_val);
    case Split::test: return generate_samples(cfg.synthetic, cfg.seed, kStreamTest, cfg.n_test);
  }
  return {};
}

RunConfig resolve_class_weights(const RunConfig& cfg, const std::vector<Sample>& train_set) {
  PixelCounts counts;
  for (const auto& s : train_set) counts += count_pixels(feature_labels(s.label, cfg.encoder));
  const ClassWeights w = class_weights(counts.changed, counts.unchanged);
  RunConfig out = cfg;
  out.loss_cfg.w1 = w.w1;
  out.loss_cfg.w2 = w.w2;
  return out;
}

namespace {

struct Prepared {
  const Sample* sample;
  LabelMap labels;  // feature resolution
};

std::vector<Prepared> prepare(const std::vector<Sample>& samples, const EncoderConfig& enc) {
  std::vector<Prepared> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    enc.check_input(s.t0.dim(1), s.t0.dim(2));
    if (s.t0.shape() != s.t1.shape()) throw ShapeError("sample images differ in shape");
    out.push_back({&s, feature_labels(s.label, enc)});
  }
  return out;
}

/// Mean pair loss over a batch, recorded in g.
Var batch_loss(Graph& g, const Bindings& params, const RunConfig& cfg, std::span<const Prepared* const> batch,
               std::vector<LossParts>* parts) {
  std::vector<Var> losses;
  for (const Prepared* p : batch) {
    const PairDistances d = forward_pair(params, cfg, g.constant(p->sample->t0), g.constant(p->sample->t1));
    LossParts lp;
    losses.push_back(pair_loss(d, p->labels, cfg, &lp));
    if (parts) parts->push_back(lp);
  }
  const std::vector<double> w(losses.size(), 1.0 / static_cast<double>(losses.size()));
  return ops::weighted_sum(losses, w);
}

}  // namespace

Checkpoint train(const RunConfig& cfg, const std::vector<Sample>& train_set, const EpochObserver& observer) {
  cfg.validate();
  if (train_set.empty()) throw ContractError("train: empty training set");
  const RunConfig run = cfg.weight_mode == WeightMode::dataset && cfg.loss == LossKind::wdmc
                            ? resolve_class_weights(cfg, train_set)
                            : cfg;
  Model model = init_model(run);
  const std::vector<Prepared> data = prepare(train_set, run.encoder);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  AdamState adam;
  const AdamOptions opt{run.lr};
  Checkpoint ckpt{run, {}, 0, {}};
  for (std::size_t epoch = 0; epoch < run.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(run.seed, kStreamShuffle, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += run.batch_size) {
      const std::size_t end = std::min(order.size(), start + run.batch_size);
      std::vector<const Prepared*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&data[order[i]]);

      Graph g;
      const Bindings params = bind_params(g, model.params, true);
      std::vector<LossParts> parts;
      const Var loss = batch_loss(g, params, run, batch, &parts);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << " batch " << batches << ":";
        for (std::size_t k = 0; k < parts.size(); ++k) {
          msg << " [pair " << order[start + k] << " L_sa=" << parts[k].l_sa << " L_ca=" << parts[k].l_ca
              << " L_e=" << parts[k].l_e << "]";
        }
        throw TrainingError(msg.str());
      }
      g.backward(loss);
      TensorMap grads;
      for (const auto& [name, var] : params) grads.emplace(name, g.grad(var));
      adam_step(model.params, grads, adam, opt);
      epoch_loss += value;
      ++batches;
    }
    const double mean = epoch_loss / static_cast<double>(batches);
    ckpt.loss_history.push_back(mean);
    ckpt.epoch = epoch + 1;
    if (observer) observer(epoch, mean);
  }
  ckpt.params = std::move(model.params);
  return ckpt;
}

std::vector<Tensor> distance_maps(const Model& model, const std::vector<Sample>& samples) {
  for (const auto& s : samples) {
    model.config.encoder.check_input(s.t0.dim(1), s.t0.dim(2));
    if (s.t0.shape() != s.t1.shape()) throw ShapeError("sample images differ in shape");
  }
  std::vector<Tensor> out(samples.size());
  const auto n = static_cast<long long>(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = distance_map(model, s.t0, s.t1);
  }
  return out;
}

Evaluation evaluate(const Model& model, const std::vector<Sample>& samples, double t) {
  if (samples.empty()) throw ContractError("evaluate: empty split");
  const std::vector<Tensor> maps = distance_maps(model, samples);
  Evaluation ev;
  ConfusionCounts total;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ConfusionCounts c = confusion(threshold(maps[i], t), feature_labels(samples[i].label, model.config.encoder));
    ev.per_image.push_back(metrics(c));
    total += c;
  }
  ev.overall = metrics(total);
  return ev;
}

Evaluation evaluate(const Model& model, const std::vector<Sample>& samples) {
  return evaluate(model, samples, model.config.decision_threshold());
}

Prediction predict(const Model& model, const Tensor& t0, const Tensor& t1, double t) {
  if (t0.rank() != 3) throw ShapeError("predict: expected 3×H×W images, got " + to_string(t0.shape()));
  model.config.encoder.check_input(t0.dim(1), t0.dim(2));
  Prediction p;
  p.threshold = t;
  p.distance = distance_map(model, t0, t1);
  const std::size_t s = model.config.encoder.stride();
  const std::size_t h = p.distance.dim(0), w = p.distance.dim(1);
  p.distance_full = Tensor(Shape{h * s, w * s});
  for (std::size_t y = 0; y < h * s; ++y)
    for (std::size_t x = 0; x < w * s; ++x) p.distance_full.at(y, x) = p.distance.at(y / s, x / s);
  p.change = threshold(p.distance_full, t);
  return p;
}

namespace {

void finish(GradcheckReport& report, const GradcheckOptions& opt) {
  report.max_error = 0.0;
  report.passed = true;
  for (auto& pr : report.probes) {
    pr.abs_error = std::abs(pr.analytic - pr.numeric);
    pr.rel_error = relative_error(pr.analytic, pr.numeric);
    pr.ok = gradients_agree(pr.analytic, pr.numeric, opt.rel_tol, opt.abs_tol);
    const bool dead = std::max(std::abs(pr.analytic), std::abs(pr.numeric)) <= opt.abs_tol;
    if (!dead) report.max_error = std::max(report.max_error, pr.rel_error);
    report.passed = report.passed && pr.ok;
  }
}

}  // namespace

GradcheckReport gradcheck(const RunConfig& cfg, const GradcheckOptions& opt) {
  if (opt.probes == 0) throw ContractError("gradcheck: need at least one probe");
  RunConfig run = cfg;
  run.synthetic.image_size = opt.image_size;
  run.validate();
  const auto samples = generate_samples(run.synthetic, derive_seed(run.seed, kStreamGradcheck), 0, opt.samples);
  if (run.weight_mode == WeightMode::dataset && run.loss == LossKind::wdmc) run = resolve_class_weights(run, samples);
  Model model = init_model(run);
  Rng rng(derive_seed(run.seed, kStreamGradcheck, 1));
  std::uniform_real_distribution<double> scale(0.3, 0.8);
  model.params.at(kSpatialEta)[0] = scale(rng);
  model.params.at(kChannelGamma)[0] = scale(rng);

  const std::vector<Prepared> data = prepare(samples, run.encoder);
  std::vector<const Prepared*> batch;
  for (const auto& p : data) batch.push_back(&p);

  auto loss_at = [&](const TensorMap& params) {
    Graph g;
    const Bindings b = bind_params(g, params, false);
    return batch_loss(g, b, run, batch, nullptr).value()[0];
  };

  Graph g;
  const Bindings bound = bind_params(g, model.params, true);
  g.backward(batch_loss(g, bound, run, batch, nullptr));

  std::vector<std::string> names;
  for (const auto& [name, t] : model.params) names.push_back(name);
  GradcheckReport report;
  for (std::size_t k = 0; k < opt.probes; ++k) {
    // Cycle through tensors so every parameter group is probed.
    const std::string& name = names[k % names.size()];
    const std::size_t index = static_cast<std::size_t>(rng() % model.params.at(name).size());
    TensorMap probe = model.params;
    const auto f = [&](const Tensor& x) {
      probe.at(name)[index] = x[0];
      return Tensor::scalar(loss_at(probe));
    };
    const Tensor numeric = finite_difference_grad(f, Tensor::scalar(model.params.at(name)[index]), opt.step);
    report.probes.push_back({name, index, g.grad(lookup(bound, name))[index], numeric[0]});
  }
  finish(report, opt);
  return report;
}

GradcheckReport gradcheck_linear(std::uint64_t seed, const GradcheckOptions& opt) {
  Rng rng(derive_seed(seed, kStreamGradcheck, 2));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor w(Shape{4, 3}), x(Shape{3, 5});
  for (double& v : w.storage()) v = u(rng);
  for (double& v : x.storage()) v = u(rng);
  auto loss = [&](const Tensor& wv) {
    Graph g;
    return ops::sum(ops::matmul(g.constant(wv), g.constant(x))).value();
  };
  Graph g;
  const Var wp = g.parameter(w);
  g.backward(ops::sum(ops::matmul(wp, g.constant(x))));
  const Tensor analytic = g.grad(wp);
  const Tensor numeric = finite_difference_grad(loss, w, opt.step);
  GradcheckReport report;
  for (std::size_t k = 0; k < opt.probes; ++k) {
    const std::size_t i = k % w.size();
    report.probes.push_back({"W", i, analytic[i], numeric[i]});
  }
  finish(report, opt);
  return report;
}

}  // namespace dascd
