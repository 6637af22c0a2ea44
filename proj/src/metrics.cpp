#include "dascd/metrics.hpp"

#include <cstdio>
#include <sstream>

namespace dascd {

ChangeMap threshold(const Tensor& distances, double t) {
  if (!(t >= 0.0)) throw ContractError("threshold must be >= 0");
  if (distances.rank() != 2) throw ShapeError("threshold: expected an H×W distance map, got " + to_string(distances.shape()));
  ChangeMap out(distances.dim(0), distances.dim(1));
  for (std::size_t p = 0; p < distances.size(); ++p) out.values[p] = distances[p] > t ? 1 : 0;
  return out;
}

ConfusionCounts confusion(const ChangeMap& pred, const LabelMap& label) {
  if (pred.height != label.height || pred.width != label.width) {
    throw ShapeError("confusion: prediction " + std::to_string(pred.height) + "x" + std::to_string(pred.width) +
                     " vs label " + std::to_string(label.height) + "x" + std::to_string(label.width));
  }
  // Index by 2·pred + label: 0 = tn, 1 = fn, 2 = fp, 3 = tp.
  std::uint64_t bins[4] = {0, 0, 0, 0};
  for (std::size_t p = 0; p < pred.size(); ++p) ++bins[2 * pred.values[p] + label.values[p]];
  return {bins[3], bins[2], bins[0], bins[1]};
}

MetricsReport metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw ContractError("metrics: no pixels counted");
  MetricsReport m;
  m.counts = c;
  const auto tp = static_cast<double>(c.tp);
  if (c.tp + c.fp > 0) m.precision = tp / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = tp / static_cast<double>(c.tp + c.fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  m.oa = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return m;
}

std::string to_record(const MetricsReport& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "tp=%llu fp=%llu tn=%llu fn=%llu precision=%.6f recall=%.6f f1=%.6f oa=%.6f",
                static_cast<unsigned long long>(m.counts.tp), static_cast<unsigned long long>(m.counts.fp),
                static_cast<unsigned long long>(m.counts.tn), static_cast<unsigned long long>(m.counts.fn),
                m.precision, m.recall, m.f1, m.oa);
  return buf;
}

std::string to_table(const MetricsReport& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%10s %10s %10s %10s\n%10.4f %10.4f %10.4f %10.4f\n", "Pre", "Rec", "F1", "OA",
                m.precision, m.recall, m.f1, m.oa);
  return buf;
}

SweepResult threshold_sweep(std::span<const Tensor> distances, std::span<const LabelMap> labels,
                            std::span<const double> grid) {
  if (grid.empty()) throw ContractError("threshold_sweep: empty threshold grid");
  if (distances.size() != labels.size()) throw ContractError("threshold_sweep: distance and label counts differ");
  if (distances.empty()) throw ContractError("threshold_sweep: no distance maps");
  // Validate up front; nothing may throw inside the parallel region.
  for (double t : grid) {
    if (!(t >= 0.0)) throw ContractError("threshold_sweep: thresholds must be >= 0");
  }
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (distances[i].rank() != 2 || distances[i].dim(0) != labels[i].height || distances[i].dim(1) != labels[i].width) {
      throw ShapeError("threshold_sweep: distance map " + to_string(distances[i].shape()) + " does not match its label");
    }
  }
  SweepResult result;
  result.rows.resize(grid.size());
  const auto n = static_cast<long long>(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (long long kk = 0; kk < n; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    ConfusionCounts counts;
    for (std::size_t i = 0; i < distances.size(); ++i) counts += confusion(threshold(distances[i], grid[k]), labels[i]);
    result.rows[k] = SweepRow{grid[k], metrics(counts)};
  }
  for (std::size_t k = 1; k < result.rows.size(); ++k) {
    if (result.rows[k].report.f1 > result.rows[result.best].report.f1) result.best = k;
  }
  return result;
}

SweepResult threshold_sweep(const Tensor& distances, const LabelMap& label, std::span<const double> grid) {
  return threshold_sweep(std::span<const Tensor>(&distances, 1), std::span<const LabelMap>(&label, 1), grid);
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

}  // namespace dascd
