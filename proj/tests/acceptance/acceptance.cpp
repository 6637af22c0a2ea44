// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "dascd/attention.hpp"
#include "dascd/dataset.hpp"
#include "dascd/losses.hpp"
#include "dascd/trainer.hpp"
#include "../oracles.hpp"
#include "../support.hpp"

using namespace dascd;
using dascd::test::max_abs_diff;
using dascd::test::random_map;
using dascd::test::random_tensor;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kOracleTol = 1e-10;
constexpr double kGradTol = 1e-4;
constexpr double kReductionTol = 1e-12;
constexpr double kF1Floor = 0.85;
constexpr double kAblationSlack = -0.01;
constexpr double kPseudoRate = 0.05;

// Desk learning rate for the toy runs; everything else is the library default.
constexpr double kDeskLr = 3e-3;
constexpr std::uint64_t kSeeds[] = {0, 1, 2};

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail, double seconds) {
  std::printf("[%s] C%d %s: %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, name, detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

void identity_at_init() {
  Clock clock;
  std::mt19937_64 rng(101);
  int exact = 0;
  for (int k = 0; k < 50; ++k) {
    std::uniform_int_distribution<std::size_t> dim(1, 8);
    const std::size_t c = dim(rng);
    const Tensor f0 = random_tensor({c, dim(rng), dim(rng)}, rng, -5, 5);
    const Tensor f1 = random_tensor(f0.shape(), rng, -5, 5);
    Rng init(rng());
    const TensorMap params = init_attention(c, init);
    Graph g;
    const auto r = dual_attention_pair(g.constant(f0), g.constant(f1), bind_params(g, params, false), {});
    exact += r.t0.fused.value() == f0 && r.t1.fused.value() == f1;
  }
  report(1, "identity-at-init", exact == 50, std::to_string(exact) + "/50 maps returned bit-for-bit",
         clock.seconds());
}

void loop_oracle() {
  Clock clock;
  std::mt19937_64 rng(102);
  double worst = 0.0;
  for (std::size_t c = 1; c <= 4; ++c)
    for (std::size_t h = 1; h <= 6; ++h)
      for (std::size_t w = 1; w <= 6; ++w) {
        const Tensor f = random_tensor({c, h, w}, rng);
        SpatialAttentionParams sp;
        sp.proj_a = random_tensor({c, c, 1, 1}, rng);
        sp.proj_b = random_tensor({c, c, 1, 1}, rng);
        sp.proj_c = random_tensor({c, c, 1, 1}, rng);
        sp.eta = std::uniform_real_distribution<double>(-1, 1)(rng);
        const double gamma = std::uniform_real_distribution<double>(-1, 1)(rng);
        const auto [sa, fs] = spatial_attention(f, sp);
        const auto [sa_ref, fs_ref] = oracle::spatial_attention(f, sp.proj_a, sp.proj_b, sp.proj_c, sp.eta);
        const auto [ca, fx] = channel_attention(f, ChannelAttentionParams{gamma});
        const auto [ca_ref, fx_ref] = oracle::channel_attention(f, gamma);
        worst = std::max({worst, max_abs_diff(sa, sa_ref), max_abs_diff(fs, fs_ref), max_abs_diff(ca, ca_ref),
                          max_abs_diff(fx, fx_ref)});
      }
  report(2, "loop-oracle equivalence", worst <= kOracleTol,
         fmt("max abs diff %.3e over all shapes up to 4x6x6", worst), clock.seconds());
}

void gradient_suite() {
  Clock clock;
  GradcheckOptions opt;
  opt.probes = 50;
  const GradcheckReport r = gradcheck(RunConfig{}, opt);
  const auto passed = std::count_if(r.probes.begin(), r.probes.end(), [](const ProbeResult& p) { return p.ok; });
  report(3, "gradient suite", r.passed && r.max_error < kGradTol,
         std::to_string(passed) + "/50 probes, " + fmt("max rel error %.3e", r.max_error), clock.seconds());
}

void reduction_identity() {
  Clock clock;
  std::mt19937_64 rng(104);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    std::uniform_int_distribution<std::size_t> dim(1, 12);
    const std::size_t h = dim(rng), w = dim(rng);
    const Tensor d = random_tensor({h, w}, rng, 0.0, 3.0);
    const LabelMap y = random_map(h, w, rng, 0.3);
    LossConfig cfg;
    cfg.m1 = 0.0;
    cfg.w1 = cfg.w2 = 1.0;
    cfg.m2 = std::uniform_real_distribution<double>(0.1, 3.0)(rng);
    cfg.reduction = k % 2 ? Reduction::mean : Reduction::sum;
    const double a = wdmc_loss(d, y, cfg), b = contrastive_loss(d, y, cfg.m2, cfg.reduction);
    worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
  }
  report(4, "reduction identity", worst <= kReductionTol, fmt("max diff %.3e over 100 instances", worst),
         clock.seconds());
}

void table_one() {
  Clock clock;
  const fs::path data(DASCD_TEST_DATA);
  const auto total_ratio = [&](const char* file) {
    return *read_pixel_counts(data / file).total.ratio();
  };
  const double cdd = total_ratio("table1_cdd.tsv"), bcdd = total_ratio("table1_bcdd.tsv");
  const bool ok = fmt("%.3f", cdd) == "0.147" && fmt("%.3f", bcdd) == "0.045";
  report(5, "pixel-count statistics", ok, fmt("CDD %.3f", cdd) + fmt(", BCDD %.3f", bcdd), clock.seconds());
}

void metrics_identity() {
  Clock clock;
  std::mt19937_64 rng(106);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  int exact = 0;
  for (int k = 0; k < 1000; ++k) {
    const BinaryMap pred = random_map(64, 64, rng, p(rng)), label = random_map(64, 64, rng, p(rng));
    const oracle::Counts c = oracle::count(pred, label);
    const oracle::Scores s = oracle::scores(c);
    const MetricsReport m = metrics(confusion(pred, label));
    exact += m.counts.tp == c.tp && m.counts.fp == c.fp && m.counts.tn == c.tn && m.counts.fn == c.fn &&
             m.precision == s.p && m.recall == s.r && m.f1 == s.f1 && m.oa == s.oa;
  }
  report(6, "metrics identity", exact == 1000, std::to_string(exact) + "/1000 pairs exact", clock.seconds());
}

struct Variant {
  const char* name;
  RunConfig cfg;
};

struct RunResult {
  Checkpoint ckpt;
  MetricsReport test;
  MetricsReport pseudo;
};

RunConfig desk_config(std::uint64_t seed) {
  RunConfig cfg;
  cfg.lr = kDeskLr;
  cfg.seed = seed;
  return cfg;
}

RunResult run(const RunConfig& cfg) {
  RunResult r{train(cfg, training_data(cfg)), {}, {}};
  const Model model = r.ckpt.model();
  r.test = evaluate(model, split_data(cfg, Split::test)).overall;
  RunConfig pseudo = cfg;
  pseudo.synthetic.n_shapes = 0;
  r.pseudo = evaluate(model, split_data(pseudo, Split::test)).overall;
  return r;
}

std::vector<char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void end_to_end() {
  std::vector<Variant> variants;
  for (std::uint64_t seed : kSeeds) {
    RunConfig dasnet = desk_config(seed);
    RunConfig contrastive = dasnet;
    contrastive.loss = LossKind::contrastive;
    RunConfig plain = dasnet;
    plain.attention = {false, false};
    RunConfig cosine = dasnet;
    cosine.metric = DistanceMetric::cosine;
    variants.push_back({"dasnet", dasnet});
    variants.push_back({"contrastive", contrastive});
    variants.push_back({"no-attention", plain});
    variants.push_back({"cosine", cosine});
  }

  Clock clock;
  std::vector<RunResult> results(variants.size());
  // Runs are independent; each one is internally deterministic.
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < variants.size(); ++i) results[i] = run(variants[i].cfg);
  const double train_seconds = clock.seconds();

  std::vector<double> f1[4], pseudo_rate;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const RunResult& r = results[i];
    std::printf("  seed=%llu %-12s test f1=%.4f  pseudo-change rate=%.4f\n",
                static_cast<unsigned long long>(variants[i].cfg.seed), variants[i].name, r.test.f1,
                static_cast<double>(r.pseudo.counts.tp + r.pseudo.counts.fp) /
                    static_cast<double>(r.pseudo.counts.total()));
    f1[i % 4].push_back(r.test.f1);
    if (i % 4 == 0) {
      pseudo_rate.push_back(static_cast<double>(r.pseudo.counts.tp + r.pseudo.counts.fp) /
                            static_cast<double>(r.pseudo.counts.total()));
    }
  }

  const double dasnet_f1 = median(f1[0]);
  report(7, "toy end-to-end", dasnet_f1 >= kF1Floor, fmt("median F1 %.4f over 3 seeds", dasnet_f1),
         train_seconds);

  const char* labels[] = {"wdmc-contrastive", "dual-none", "l2-cosine"};
  const int against[] = {1, 2, 3};
  int positive = 0;
  bool within = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> diffs;
    for (std::size_t s = 0; s < std::size(kSeeds); ++s) diffs.push_back(f1[0][s] - f1[against[k]][s]);
    const double m = median(diffs);
    positive += m > 0.0;
    within = within && m >= kAblationSlack;
    detail += std::string(k ? ", " : "") + labels[k] + fmt(" %+.4f", m);
  }
  report(8, "directional ablations", within && positive >= 2,
         detail + " (" + std::to_string(positive) + "/3 positive)", 0.0);

  const double rate = median(pseudo_rate);
  report(9, "pseudo-change robustness", rate < kPseudoRate,
         fmt("median changed-pixel rate %.4f on 25 pseudo-change pairs", rate), 0.0);

  Clock det;
  const Checkpoint again = train(variants[0].cfg, training_data(variants[0].cfg));
  const fs::path dir = fs::temp_directory_path() / "dascd_acceptance";
  fs::create_directories(dir);
  save_checkpoint(dir / "a.dascd", results[0].ckpt);
  save_checkpoint(dir / "b.dascd", again);
  const bool identical = file_bytes(dir / "a.dascd") == file_bytes(dir / "b.dascd");
  const Model reloaded = load_checkpoint(dir / "a.dascd").model();
  const auto test = split_data(variants[0].cfg, Split::test);
  const bool transparent = evaluate(reloaded, test).overall == results[0].test;
  fs::remove_all(dir);
  report(10, "determinism and checkpoint transparency", identical && transparent,
         std::string(identical ? "checkpoints bitwise identical" : "checkpoints differ") +
             (transparent ? ", reloaded evaluation identical" : ", reloaded evaluation differs"),
         det.seconds());
}

}  // namespace

int main(int argc, char** argv) {
  const bool skip_training = argc > 1 && std::string(argv[1]) == "--skip-training";
  try {
    identity_at_init();
    loop_oracle();
    gradient_suite();
    reduction_identity();
    table_one();
    metrics_identity();
    if (skip_training) {
      std::printf("C7-C10 skipped\n");
    } else {
      end_to_end();
    }
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
