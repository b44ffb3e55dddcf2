#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace emif {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// true = real token/unit, false = padding.
using Mask = std::vector<bool>;

Mask full_mask(std::size_t n);
bool any_unmasked(const Mask& mask);
std::size_t count_unmasked(const Mask& mask);

Vector softmax(const Vector& logits);
Vector log_softmax(const Vector& logits);

// Softmax restricted to unmasked entries; masked entries get exactly 0 and
// never enter the normalizer. Throws DegenerateInputError if nothing is
// unmasked.
Vector masked_softmax(const Vector& logits, const Mask& mask);

// Gradient of a (masked) softmax with respect to its logits, given the
// softmax output and the gradient with respect to that output. Masked
// entries have probability 0 and therefore receive 0.
Vector softmax_backward(const Vector& probs, const Vector& d_probs);

void require_shape(bool ok, const std::string& what);

inline Vector sigmoid(const Vector& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

}  // namespace emif
