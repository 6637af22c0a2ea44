#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dascd/binary_map.hpp"
#include "dascd/tensor.hpp"

namespace dascd {

/// mask = 1 where d > t. Throws ContractError for negative t.
ChangeMap threshold(const Tensor& distances, double t);

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(const ChangeMap& pred, const LabelMap& label);

/// Precision, recall, F1 and overall accuracy from confusion counts.
///
/// Empty denominators yield 0: no predicted positives gives P = 0, no actual
/// positives gives R = 0, and P + R = 0 gives F1 = 0.
struct MetricsReport {
  ConfusionCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double oa = 0.0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Throws ContractError when the counts are all zero.
MetricsReport metrics(const ConfusionCounts& counts);

/// "tp=.. fp=.. tn=.. fn=.. precision=.. recall=.. f1=.. oa=.." on one line.
std::string to_record(const MetricsReport& m);
/// Two-line human-readable table.
std::string to_table(const MetricsReport& m);

struct SweepRow {
  double threshold;
  MetricsReport report;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t best = 0;  // row index with the highest F1 (first on ties)
};

/// Micro-averaged metrics for each threshold over a set of distance/label maps.
SweepResult threshold_sweep(std::span<const Tensor> distances, std::span<const LabelMap> labels,
                            std::span<const double> grid);
SweepResult threshold_sweep(const Tensor& distances, const LabelMap& label, std::span<const double> grid);

/// n evenly spaced values from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, std::size_t n);

}  // namespace dascd
