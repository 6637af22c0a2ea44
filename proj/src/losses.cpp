#include "dascd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dascd {

DistanceMetric parse_metric(std::string_view s) {
  if (s == "l2") return DistanceMetric::l2;
  if (s == "cosine") return DistanceMetric::cosine;
  throw ContractError("unknown distance metric '" + std::string(s) + "' (expected l2 or cosine)");
}

std::string_view to_string(DistanceMetric m) noexcept { return m == DistanceMetric::l2 ? "l2" : "cosine"; }

void LossConfig::validate() const {
  if (!(m1 >= 0.0)) throw ContractError("loss: m1 must be >= 0");
  if (!(m2 > m1)) throw ContractError("loss: m2 must exceed m1");
  if (!(w1 > 0.0) || !(w2 > 0.0)) throw ContractError("loss: class weights must be positive");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(lambda3 >= 0.0)) {
    throw ContractError("loss: supervision weights must be >= 0");
  }
}

namespace {

void require_features(const Tensor& f0, const Tensor& f1) {
  if (f0.rank() != 3) throw ShapeError("pixel_distance: expected C×H×W features, got " + to_string(f0.shape()));
  require_same_shape(f0, f1, "pixel_distance");
}

void require_labels(const Tensor& d, const LabelMap& y, const char* what) {
  if (d.rank() != 2 || d.dim(0) != y.height || d.dim(1) != y.width) {
    throw ShapeError(std::string(what) + ": distance map " + to_string(d.shape()) + " vs label map " +
                     std::to_string(y.height) + "x" + std::to_string(y.width));
  }
}

double reduce(double total, std::size_t n, Reduction r) {
  return r == Reduction::mean ? total / static_cast<double>(n) : total;
}

struct PixelTerm {
  double loss;
  double slope;  // d(loss)/d(d)
};

PixelTerm contrastive_term(double d, std::uint8_t y, double m) {
  if (y == 0) return {0.5 * d * d, d};
  const double gap = std::max(m - d, 0.0);
  return {0.5 * gap * gap, -gap};
}

PixelTerm wdmc_term(double d, std::uint8_t y, const LossConfig& cfg) {
  if (y == 0) {
    const double over = std::max(d - cfg.m1, 0.0);
    return {0.5 * cfg.w1 * over * over, cfg.w1 * over};
  }
  const double gap = std::max(cfg.m2 - d, 0.0);
  return {0.5 * cfg.w2 * gap * gap, -cfg.w2 * gap};
}

template <typename TermFn>
Var pixel_loss(Var distances, const LabelMap& labels, Reduction reduction, TermFn term, const char* what) {
  const Tensor& d = distances.value();
  require_labels(d, labels, what);
  const std::size_t n = d.size();
  std::vector<double> slopes(n);
  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const PixelTerm t = term(d[p], labels.values[p]);
    total += t.loss;
    slopes[p] = t.slope;
  }
  const double norm = reduction == Reduction::mean ? 1.0 / static_cast<double>(n) : 1.0;
  return distances.graph()->record(
      Tensor::scalar(total * norm), {distances},
      [distances, slopes = std::move(slopes), norm](Graph& g, const Tensor& go) {
        std::vector<double> gd(slopes.size());
        for (std::size_t p = 0; p < gd.size(); ++p) gd[p] = slopes[p] * norm * go[0];
        g.accumulate(distances, gd);
      });
}

}  // namespace

Var pixel_distance(Var f0, Var f1, DistanceMetric metric) {
  if (!f0.valid() || f0.graph() != f1.graph()) throw StateError("pixel_distance: operands from different graphs");
  const Tensor& a = f0.value();
  const Tensor& b = f1.value();
  require_features(a, b);
  const std::size_t c = a.dim(0), h = a.dim(1), w = a.dim(2), n = h * w;
  Tensor d(Shape{h, w});
  // Per-pixel partial derivatives dd/da_c; dd/db_c follows from them.
  std::vector<double> da(c * n, 0.0), db(c * n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    if (metric == DistanceMetric::l2) {
      double ss = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        const double diff = a[k * n + p] - b[k * n + p];
        ss += diff * diff;
      }
      const double dist = std::sqrt(ss);
      d[p] = dist;
      if (dist > 0.0) {
        for (std::size_t k = 0; k < c; ++k) {
          const double g = (a[k * n + p] - b[k * n + p]) / dist;
          da[k * n + p] = g;
          db[k * n + p] = -g;
        }
      }
    } else {
      double ab = 0.0, aa = 0.0, bb = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        ab += a[k * n + p] * b[k * n + p];
        aa += a[k * n + p] * a[k * n + p];
        bb += b[k * n + p] * b[k * n + p];
      }
      if (aa == 0.0 || bb == 0.0) {
        d[p] = 1.0;
        continue;
      }
      const double na = std::sqrt(aa), nb = std::sqrt(bb);
      const double cosv = ab / (na * nb);
      d[p] = 1.0 - cosv;
      for (std::size_t k = 0; k < c; ++k) {
        da[k * n + p] = -(b[k * n + p] / (na * nb) - cosv * a[k * n + p] / aa);
        db[k * n + p] = -(a[k * n + p] / (na * nb) - cosv * b[k * n + p] / bb);
      }
    }
  }
  return f0.graph()->record(std::move(d), {f0, f1},
                            [f0, f1, c, n, da = std::move(da), db = std::move(db)](Graph& g, const Tensor& go) {
                              std::vector<double> ga(c * n), gb(c * n);
                              for (std::size_t k = 0; k < c; ++k)
                                for (std::size_t p = 0; p < n; ++p) {
                                  ga[k * n + p] = da[k * n + p] * go[p];
                                  gb[k * n + p] = db[k * n + p] * go[p];
                                }
                              g.accumulate(f0, ga);
                              g.accumulate(f1, gb);
                            });
}

Tensor pixel_distance(const Tensor& f0, const Tensor& f1, DistanceMetric metric) {
  Graph g;
  return pixel_distance(g.constant(f0), g.constant(f1), metric).value();
}

Var contrastive_loss(Var distances, const LabelMap& labels, double margin, Reduction reduction) {
  if (!(margin >= 0.0)) throw ContractError("contrastive_loss: margin must be >= 0");
  return pixel_loss(distances, labels, reduction,
                    [margin](double d, std::uint8_t y) { return contrastive_term(d, y, margin); },
                    "contrastive_loss");
}

double contrastive_loss(const Tensor& distances, const LabelMap& labels, double margin, Reduction reduction) {
  if (!(margin >= 0.0)) throw ContractError("contrastive_loss: margin must be >= 0");
  require_labels(distances, labels, "contrastive_loss");
  double total = 0.0;
  for (std::size_t p = 0; p < distances.size(); ++p) total += contrastive_term(distances[p], labels.values[p], margin).loss;
  return reduce(total, distances.size(), reduction);
}

Var wdmc_loss(Var distances, const LabelMap& labels, const LossConfig& cfg) {
  cfg.validate();
  return pixel_loss(distances, labels, cfg.reduction,
                    [&cfg](double d, std::uint8_t y) { return wdmc_term(d, y, cfg); }, "wdmc_loss");
}

double wdmc_loss(const Tensor& distances, const LabelMap& labels, const LossConfig& cfg) {
  cfg.validate();
  require_labels(distances, labels, "wdmc_loss");
  double total = 0.0;
  for (std::size_t p = 0; p < distances.size(); ++p) total += wdmc_term(distances[p], labels.values[p], cfg).loss;
  return reduce(total, distances.size(), cfg.reduction);
}

ClassWeights class_weights(std::uint64_t n_changed, std::uint64_t n_unchanged) {
  if (n_changed == 0 || n_unchanged == 0) {
    throw ContractError("class_weights: degenerate dataset (" + std::to_string(n_changed) + " changed, " +
                        std::to_string(n_unchanged) +
                        " unchanged pixels); clamp the counts or rebalance the data so both classes occur");
  }
  const double total = static_cast<double>(n_changed) + static_cast<double>(n_unchanged);
  const double p_unchanged = static_cast<double>(n_unchanged) / total;
  const double p_changed = static_cast<double>(n_changed) / total;
  return {1.0 / p_unchanged, 1.0 / p_changed};
}

double total_loss(double l_sa, double l_ca, double l_e, const LossConfig& cfg) noexcept {
  return cfg.lambda1 * l_sa + cfg.lambda2 * l_ca + cfg.lambda3 * l_e;
}

}  // namespace dascd
