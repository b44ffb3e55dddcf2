#pragma once

#include "emif/coattention.hpp"
#include "emif/corpus.hpp"
#include "emif/divergence.hpp"
#include "emif/encoder.hpp"
#include "emif/fusion.hpp"
#include "emif/tensor.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace emif {

enum class Variant { Full, NoRelevant, NoComments, NoCoAttention, NoInconsistency };

inline constexpr Variant kAllVariants[] = {Variant::Full, Variant::NoRelevant, Variant::NoComments,
                                           Variant::NoCoAttention, Variant::NoInconsistency};

/// "FULL", "NO_R", "NO_C", "NO_CA", "NO_IL".
std::string_view to_string(Variant v);
/// Accepts the upper-case names and the lower-case flag spellings.
Variant parse_variant(std::string_view name);

enum class Channel { News = 0, Comments = 1, Relevant = 2 };

struct ModelDims {
  std::size_t vocab = 2;
  std::size_t dim = 32;          // d: embedding and per-direction hidden size
  std::size_t coattention = 32;  // k
  std::size_t divergence = 32;   // h
  std::size_t top_k = 5;         // K
  bool shared_encoder = true;
  Activation activation = Activation::Tanh;

  bool operator==(const ModelDims&) const = default;
};

struct ParamTensor {
  std::string name;
  Eigen::Map<Matrix> values;
};

struct ConstParamTensor {
  std::string name;
  Eigen::Map<const Matrix> values;
};

struct ModelParams {
  ModelDims dims;
  Matrix embedding;                        // V x d, row 0 (PAD) fixed at zero
  std::vector<BiRecurrentParams> encoders;  // one shared, or news/comments/relevant
  WordAttentionParams word_attention;
  CoAttentionParams coattention;
  DivergenceParams divergence;
  FusionParams fusion;

  /// Correctly shaped, all-zero parameters (also the gradient container).
  static ModelParams zeros(const ModelDims& dims);
  static ModelParams initialize(const ModelDims& dims, std::uint64_t seed);

  const BiRecurrentParams& encoder(Channel c) const;
  BiRecurrentParams& encoder(Channel c);

  /// Every parameter group as a named view, in a fixed order.
  std::vector<ParamTensor> tensors();
  std::vector<ConstParamTensor> tensors() const;

  bool all_finite() const;
  void set_zero();
};

/// Every intermediate of one forward pass; explanations and the backward
/// pass read from here rather than recomputing.
struct ForwardPass {
  Variant variant = Variant::Full;
  int label = 0;
  double beta = 1.0;

  ChannelEncoding news;
  ChannelEncoding comments;  // empty for NO_C
  ChannelEncoding relevant;  // empty for NO_R
  CoAttentionOutput coattention;

  Vector news_mean;          // column mean of A (NO_C input)
  Vector news_words_pooled;  // mean of word-level A, fed to the divergence scorer
  Vector similarity;         // S
  SelectedEvidence evidence;

  Vector joint;         // first classifier block (4d)
  Vector kl_joint;      // the 4d side of the inconsistency loss
  Vector evidence_input;  // classifier evidence block (zero for NO_R)
  Vector probs;
  KlTerms kl;
  LossBreakdown loss;

  bool uses_comments() const { return variant != Variant::NoComments; }
  bool uses_relevant() const { return variant != Variant::NoRelevant; }
  /// argmax of probs; an exact tie predicts 0.
  int predicted() const { return probs[1] > probs[0] ? 1 : 0; }
};

ForwardPass forward(const ModelParams& params, const IndexedExample& example, Variant variant, double beta);

/// Adds d(loss.total)/d(params) into `grads` (shaped like params).
void backward(const ModelParams& params, const ForwardPass& pass, ModelParams& grads);

}  // namespace emif
