#pragma once

#include "emif/encoder.hpp"
#include "emif/tensor.hpp"

#include <string_view>
#include <vector>

namespace emif {

enum class Activation { Tanh, Relu, Identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Scores the original article and each relevant article in a shared h-dim
/// space; similarity is the softmax over relevant articles of u . u_r.
struct DivergenceParams {
  Matrix news_weight;      // W: h x 2d
  Vector news_bias;        // b: h
  Matrix relevant_weight;  // W_r: h x 2d
  Vector relevant_bias;    // b_r: h
  Activation activation = Activation::Tanh;
};

/// Mean over unmasked columns.
Vector pool(const EncodedText& encoded);
Vector pool(const Matrix& columns);
Matrix pool_backward(const Mask& mask, const Vector& d_pooled);

Vector apply_activation(Activation a, const Vector& x);

/// The logits u . u_r, one per relevant article (column of `relevant`).
Vector similarity_logits(const Vector& news, const Matrix& relevant, const DivergenceParams& params);

/// S: a probability vector over the relevant articles.
Vector similarity_scores(const Vector& news, const Matrix& relevant, const DivergenceParams& params);

struct SelectedEvidence {
  std::vector<std::size_t> indices;  // most divergent first
  Vector concatenated;               // 2d * K, zero padded when R < K
};

/// Keeps the K articles with the smallest similarity (ties: lower index).
SelectedEvidence select_top_k_divergent(const Vector& similarity, const Matrix& relevant, int k);

}  // namespace emif
