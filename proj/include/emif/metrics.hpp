#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace emif {

/// Binary classification metrics with fake (label 1) as the positive class.
struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const MetricsReport&) const = default;
};

/// Precision, recall and F1 are 0 when their denominator is 0.
MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> labels);

}  // namespace emif
