#include "emif/tensor.hpp"

#include "emif/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace emif {

Mask full_mask(std::size_t n) { return Mask(n, true); }

bool any_unmasked(const Mask& mask) {
  return std::find(mask.begin(), mask.end(), true) != mask.end();
}

std::size_t count_unmasked(const Mask& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

Vector softmax(const Vector& logits) {
  if (logits.size() == 0) throw DegenerateInputError("softmax of an empty vector");
  const double shift = logits.maxCoeff();
  Vector e = (logits.array() - shift).exp().matrix();
  return e / e.sum();
}

Vector log_softmax(const Vector& logits) {
  if (logits.size() == 0) throw DegenerateInputError("log-softmax of an empty vector");
  const double shift = logits.maxCoeff();
  const double lse = shift + std::log((logits.array() - shift).exp().sum());
  return (logits.array() - lse).matrix();
}

Vector masked_softmax(const Vector& logits, const Mask& mask) {
  require_shape(static_cast<std::size_t>(logits.size()) == mask.size(),
                "masked_softmax: mask length differs from logits");
  double shift = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    if (mask[static_cast<std::size_t>(i)]) shift = std::max(shift, logits[i]);
  if (!std::isfinite(shift) && shift < 0)
    throw DegenerateInputError("softmax over a fully masked sequence");
  Vector out = Vector::Zero(logits.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    out[i] = std::exp(logits[i] - shift);
    total += out[i];
  }
  return out / total;
}

Vector softmax_backward(const Vector& probs, const Vector& d_probs) {
  const double inner = probs.dot(d_probs);
  return (probs.array() * (d_probs.array() - inner)).matrix();
}

void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace emif
