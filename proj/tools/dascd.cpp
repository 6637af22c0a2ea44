// dascd: train, evaluate and inspect Siamese dual-attention change detectors.
//
//   dascd train     --out model.dascd [--config run.cfg] [--set key=value ...]
//   dascd eval      --checkpoint model.dascd [--split test] [--threshold t]
//   dascd predict   --checkpoint model.dascd --t0 a.png --t1 b.png --out dir/
//   dascd stats     --manifest manifest.tsv | --counts counts.tsv
//   dascd sweep     --checkpoint model.dascd [--split val] [--lo 0 --hi 2.5 --steps 21]
//   dascd gradcheck [--probes 50] [--linear]
//   dascd gen       --out dir/
//
// Exit status: 0 success, 1 failed check, 2 bad input or contract violation,
// 3 training or I/O failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dascd/archive.hpp"
#include "dascd/config.hpp"
#include "dascd/dataset.hpp"
#include "dascd/metrics.hpp"
#include "dascd/model.hpp"
#include "dascd/synthetic.hpp"
#include "dascd/trainer.hpp"

namespace fs = std::filesystem;
using namespace dascd;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::vector<std::string> settings;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Run seed (overrides the configuration)");
  cmd->add_option("--config", c.config, "key=value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output path");
  cmd->add_option("--set", c.settings, "Configuration override, key=value (repeatable)");
}

/// Layers file settings, --set overrides and --seed on top of `base`.
RunConfig resolve(RunConfig base, const Common& c) {
  if (!c.config.empty()) base = load_config(c.config, std::move(base));
  for (const auto& s : c.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ContractError("--set expects key=value, got '" + s + "'");
    apply_setting(base, s.substr(0, eq), s.substr(eq + 1));
  }
  if (c.seed) base.seed = *c.seed;
  base.validate();
  return base;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write '" + path.string() + "'");
  out << text;
}

int run_train(const Common& c) {
  const RunConfig cfg = resolve(RunConfig{}, c);
  const fs::path out = c.out.empty() ? fs::path("model.dascd") : fs::path(c.out);
  const auto data = training_data(cfg);
  std::cout << "training on " << data.size() << " pairs, " << cfg.epochs << " epochs\n";
  const Checkpoint ckpt = train(cfg, data, [](std::size_t epoch, double loss) {
    std::printf("epoch %zu loss=%.6f\n", epoch + 1, loss);
    std::fflush(stdout);
  });
  save_checkpoint(out, ckpt);
  std::printf("w1=%.6g w2=%.6g\nsaved %s\n", ckpt.config.loss_cfg.w1, ckpt.config.loss_cfg.w2, out.string().c_str());
  return 0;
}

int run_eval(const Common& c, const std::string& checkpoint, const std::string& split,
             std::optional<double> t, bool per_image) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  // Overrides select the evaluation data; the model keeps its own parameters.
  const RunConfig data_cfg = resolve(ckpt.config, c);
  const auto samples = split_data(data_cfg, parse_split(split));
  const Model model = ckpt.model();
  const double thr = t.value_or(model.config.decision_threshold());
  const Evaluation ev = evaluate(model, samples, thr);
  std::printf("split=%s threshold=%.6g images=%zu\n", split.c_str(), thr, samples.size());
  if (per_image) {
    for (std::size_t i = 0; i < ev.per_image.size(); ++i) std::printf("image=%zu %s\n", i, to_record(ev.per_image[i]).c_str());
  }
  std::cout << to_record(ev.overall) << '\n' << to_table(ev.overall);
  if (!c.out.empty()) write_text(c.out, to_record(ev.overall) + "\n");
  return 0;
}

Image8 distance_image(const Tensor& d, double scale) {
  Image8 img(d.dim(0), d.dim(1), 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(d[i] / scale, 0.0, 1.0) * 255.0));
  }
  return img;
}

int run_predict(const Common& c, const std::string& checkpoint, const std::string& t0, const std::string& t1,
                std::optional<double> t) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const Model model = ckpt.model();
  const Tensor a = to_tensor(load_image(t0));
  const Tensor b = to_tensor(load_image(t1));
  if (a.shape() != b.shape()) {
    throw IngestError("predict: '" + t0 + "' is " + to_string(a.shape()) + " but '" + t1 + "' is " + to_string(b.shape()));
  }
  const double thr = t.value_or(model.config.decision_threshold());
  const Prediction p = predict(model, a, b, thr);
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  fs::create_directories(dir);
  double peak = 0.0;
  for (double v : p.distance_full.data()) peak = std::max(peak, v);
  const double scale = peak > 0.0 ? peak : 1.0;
  save_image(dir / "distance.png", distance_image(p.distance_full, scale));
  char sidecar[160];
  std::snprintf(sidecar, sizeof sidecar, "scale=%.17g\nthreshold=%.17g\n# distance = pixel / 255 * scale\n", scale, thr);
  write_text(dir / "distance.txt", sidecar);
  save_mask(dir / "change.png", p.change);
  std::printf("changed_fraction=%.6f threshold=%.6g\nwrote %s\n",
              static_cast<double>(p.change.count_ones()) / static_cast<double>(p.change.size()), thr,
              dir.string().c_str());
  return 0;
}

int run_stats(const Common& c, const std::string& manifest, const std::string& counts) {
  if (manifest.empty() == counts.empty()) throw ContractError("stats: give exactly one of --manifest or --counts");
  const DatasetStats s = counts.empty() ? dataset_stats(read_manifest(manifest)) : read_pixel_counts(counts);
  const std::string table = stats_table(s);
  std::cout << table;
  if (!c.out.empty()) write_text(c.out, table);
  return 0;
}

int run_sweep(const Common& c, const std::string& checkpoint, const std::string& split, double lo, double hi,
              std::size_t steps) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const RunConfig data_cfg = resolve(ckpt.config, c);
  const auto samples = split_data(data_cfg, parse_split(split));
  const Model model = ckpt.model();
  const auto maps = distance_maps(model, samples);
  std::vector<LabelMap> labels;
  for (const auto& s : samples) labels.push_back(feature_labels(s.label, model.config.encoder));
  const auto grid = linear_grid(lo, hi, steps);
  const SweepResult r = threshold_sweep(maps, labels, grid);
  std::string text;
  for (const auto& row : r.rows) {
    char head[48];
    std::snprintf(head, sizeof head, "t=%.6g ", row.threshold);
    text += head + to_record(row.report) + "\n";
  }
  char best[64];
  std::snprintf(best, sizeof best, "best_threshold=%.6g best_f1=%.6f\n", r.rows[r.best].threshold,
                r.rows[r.best].report.f1);
  text += best;
  std::cout << text;
  if (!c.out.empty()) write_text(c.out, text);
  return 0;
}

int run_gradcheck(const Common& c, std::size_t probes, bool linear, bool verbose) {
  const RunConfig cfg = resolve(RunConfig{}, c);
  GradcheckOptions opt;
  opt.probes = probes;
  const GradcheckReport r = linear ? gradcheck_linear(cfg.seed, opt) : gradcheck(cfg, opt);
  std::size_t ok = 0;
  for (const auto& p : r.probes) {
    ok += p.ok ? 1 : 0;
    if (verbose || !p.ok) {
      std::printf("%s %s[%zu] analytic=%.12g numeric=%.12g rel=%.3g abs=%.3g\n", p.ok ? "ok  " : "FAIL",
                  p.param.c_str(), p.index, p.analytic, p.numeric, p.rel_error, p.abs_error);
    }
  }
  std::printf("probes=%zu passed=%zu max_rel_error=%.3e\n", r.probes.size(), ok, r.max_error);
  return r.max_error > 1e-3 ? 1 : 0;
}

int run_gen(const Common& c) {
  const RunConfig cfg = resolve(RunConfig{}, c);
  if (c.out.empty()) throw ContractError("gen: --out directory required");
  const fs::path manifest = write_synthetic_dataset(c.out, cfg.synthetic, cfg.seed, cfg.n_train, cfg.n_val, cfg.n_test);
  std::printf("wrote %zu pairs\n%s\n", cfg.n_train + cfg.n_val + cfg.n_test, manifest.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Siamese dual-attention change detection"};
  app.require_subcommand(1);

  Common c;
  std::string checkpoint, split = "test", t0, t1, manifest, counts;
  std::optional<double> thr;
  double lo = 0.0, hi = 2.5;
  std::size_t steps = 21, probes = 50;
  bool per_image = false, linear = false, verbose = false;

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_common(train_cmd, c);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  add_common(eval_cmd, c);
  eval_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--threshold", thr);
  eval_cmd->add_flag("--per-image", per_image);

  auto* predict_cmd = app.add_subcommand("predict", "Write distance and change maps for one pair");
  add_common(predict_cmd, c);
  predict_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--t0", t0)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--t1", t1)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--threshold", thr);

  auto* stats_cmd = app.add_subcommand("stats", "Changed/unchanged pixel statistics per split");
  add_common(stats_cmd, c);
  stats_cmd->add_option("--manifest", manifest)->check(CLI::ExistingFile);
  stats_cmd->add_option("--counts", counts, "Pre-tallied split<TAB>changed<TAB>unchanged lines")
      ->check(CLI::ExistingFile);

  auto* sweep_cmd = app.add_subcommand("sweep", "Metrics over a grid of thresholds");
  add_common(sweep_cmd, c);
  sweep_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}));
  sweep_cmd->add_option("--lo", lo);
  sweep_cmd->add_option("--hi", hi);
  sweep_cmd->add_option("--steps", steps)->check(CLI::PositiveNumber);

  auto* grad_cmd = app.add_subcommand("gradcheck", "Backward pass against finite differences");
  add_common(grad_cmd, c);
  grad_cmd->add_option("--probes", probes)->check(CLI::PositiveNumber);
  grad_cmd->add_flag("--linear", linear, "Check the linear toy model instead of the full pipeline");
  grad_cmd->add_flag("-v,--verbose", verbose);

  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic dataset with a manifest");
  add_common(gen_cmd, c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return run_train(c);
    if (*eval_cmd) return run_eval(c, checkpoint, split, thr, per_image);
    if (*predict_cmd) return run_predict(c, checkpoint, t0, t1, thr);
    if (*stats_cmd) return run_stats(c, manifest, counts);
    if (*sweep_cmd) return run_sweep(c, checkpoint, split, lo, hi, steps);
    if (*grad_cmd) return run_gradcheck(c, probes, linear, verbose);
    if (*gen_cmd) return run_gen(c);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const IngestError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ArchiveError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
