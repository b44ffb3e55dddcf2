#pragma once

#include "emif/tensor.hpp"

#include <utility>

namespace emif {

/// Parameters of the sentence-comment co-attention block. `k` is the
/// attention-map height.
struct CoAttentionParams {
  Matrix affinity_weight;  // W_l: 2d x 2d
  Matrix news_proj;        // W_a: k x 2d
  Matrix comment_proj;     // W_c: k x 2d
  Vector news_score;       // w_ha: k
  Vector comment_score;    // w_hc: k
};

struct CoAttentionOutput {
  Vector news_summary;     // A_hat
  Vector comment_summary;  // C_hat
  Vector news_weights;     // v_a over N sentences
  Vector comment_weights;  // v_c over M comments
  Matrix affinity;         // F: M x N
  Matrix news_map;         // H_a: k x N
  Matrix comment_map;      // H_c: k x M

  /// [A_hat; C_hat]
  Vector joint() const;
};

/// F = tanh(C^T W_l A).
Matrix affinity(const Matrix& comments, const Matrix& news, const Matrix& weight);

/// H_a = tanh(W_a A + (W_c C) F),  H_c = tanh(W_c C + (W_a A) F^T).
std::pair<Matrix, Matrix> attention_maps(const Matrix& news, const Matrix& comments, const Matrix& affinity,
                                         const CoAttentionParams& params);

/// v_a = softmax(w_ha^T H_a), v_c = softmax(w_hc^T H_c), restricted to the
/// unmasked sentences/comments. An all-masked side falls back to every
/// column so that a degenerate (all-PAD) source still yields a distribution.
std::pair<Vector, Vector> attention_values(const Matrix& news_map, const Matrix& comment_map,
                                           const CoAttentionParams& params, const Mask& news_mask,
                                           const Mask& comment_mask);
std::pair<Vector, Vector> attention_values(const Matrix& news_map, const Matrix& comment_map,
                                           const CoAttentionParams& params);

/// A_hat = A v_a, C_hat = C v_c.
std::pair<Vector, Vector> attend(const Matrix& news, const Matrix& comments, const Vector& news_weights,
                                 const Vector& comment_weights);

CoAttentionOutput coattend(const Matrix& news, const Matrix& comments, const CoAttentionParams& params,
                           const Mask& news_mask, const Mask& comment_mask);
CoAttentionOutput coattend(const Matrix& news, const Matrix& comments, const CoAttentionParams& params);

/// Uniform weights over unmasked columns in place of learned attention.
CoAttentionOutput uniform_attend(const Matrix& news, const Matrix& comments, const Mask& news_mask,
                                 const Mask& comment_mask);

/// Backward pass of coattend. Accumulates into `grads`, `d_news`, `d_comments`.
void coattend_backward(const Matrix& news, const Matrix& comments, const CoAttentionParams& params,
                       const CoAttentionOutput& out, const Vector& d_news_summary, const Vector& d_comment_summary,
                       CoAttentionParams& grads, Matrix& d_news, Matrix& d_comments);

}  // namespace emif
