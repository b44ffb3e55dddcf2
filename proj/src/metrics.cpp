#include "emif/metrics.hpp"

#include "emif/errors.hpp"

namespace emif {

MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw ValidationError("predictions and labels differ in length");
  if (labels.empty()) throw ValidationError("cannot compute metrics over an empty set");
  MetricsReport m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == 1;
    const bool gold = labels[i] == 1;
    if (pred && gold) ++m.tp;
    else if (pred && !gold) ++m.fp;
    else if (!pred && gold) ++m.fn;
    else ++m.tn;
  }
  const auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = ratio(m.tp + m.tn, m.total());
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.recall = ratio(m.tp, m.tp + m.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

}  // namespace emif
