#pragma once

#include "emif/corpus.hpp"
#include "emif/tensor.hpp"

#include <span>
#include <vector>

namespace emif {

/// One LSTM direction. Gate rows are stacked as [input; forget; candidate;
/// output], each `hidden` rows tall.
struct LstmParams {
  Matrix input_weights;      // 4h x d
  Matrix recurrent_weights;  // 4h x h
  Vector bias;               // 4h

  std::size_t hidden() const { return static_cast<std::size_t>(recurrent_weights.cols()); }
};

struct BiRecurrentParams {
  LstmParams forward;
  LstmParams backward;
};

struct WordAttentionParams {
  Matrix weight;   // 2d x 2d
  Vector bias;     // 2d
  Vector context;  // 2d
};

/// Contextual hidden states, one column [h_fwd; h_bwd] per position. PAD
/// columns are zero.
struct EncodedText {
  Matrix hidden;
  Mask mask;

  std::size_t length() const { return mask.size(); }
};

Mask token_mask(std::span<const int> tokens);

/// Column t is row tokens[t] of the V x d table.
Matrix embed_tokens(std::span<const int> tokens, const Matrix& table);

/// Per-direction intermediates needed for backpropagation through time.
struct LstmTrace {
  std::vector<Eigen::Index> order;  // positions in processing order
  Matrix gates;                     // 4h x steps, post-activation
  Matrix cells;                     // h x steps
  Matrix hiddens;                   // h x steps
};

struct RecurrentTrace {
  LstmTrace forward;
  LstmTrace backward;
};

EncodedText bi_recurrent_encode(const Matrix& embeddings, const Mask& mask,
                                const BiRecurrentParams& params, RecurrentTrace* trace = nullptr);

/// Accumulates parameter gradients into `grads` and returns d(embeddings).
Matrix bi_recurrent_backward(const Matrix& embeddings, const RecurrentTrace& trace,
                             const BiRecurrentParams& params, const Matrix& d_hidden,
                             BiRecurrentParams& grads);

struct AttentionResult {
  Vector pooled;   // 2d
  Vector weights;  // alpha over positions, 0 on PAD
  Matrix keys;     // u_t columns, 2d x T
};

AttentionResult word_attention(const EncodedText& encoded, const WordAttentionParams& params);

/// Accumulates into `grads` and returns d(hidden).
Matrix word_attention_backward(const EncodedText& encoded, const AttentionResult& result,
                               const WordAttentionParams& params, const Vector& d_pooled,
                               WordAttentionParams& grads);

enum class Pooling { Attention, Mean };

/// A sentence, comment or relevant article after encoding. A unit with no
/// real tokens is degenerate: its pooled vector is zero and it carries no
/// gradient.
struct UnitEncoding {
  IndexSeq tokens;
  Matrix embedded;
  EncodedText encoded;
  RecurrentTrace trace;
  AttentionResult attention;  // weights only meaningful for Pooling::Attention
  Vector pooled;
  bool degenerate = false;
};

/// All units of one text channel; `pooled` holds one column per unit.
struct ChannelEncoding {
  std::vector<UnitEncoding> units;
  Matrix pooled;
  Mask mask;
  Pooling pooling = Pooling::Attention;
};

UnitEncoding encode_unit(const IndexSeq& tokens, const Matrix& table, const BiRecurrentParams& recurrent,
                         const WordAttentionParams& attention, Pooling pooling);

ChannelEncoding encode_channel(const std::vector<IndexSeq>& units, const Matrix& table,
                               const BiRecurrentParams& recurrent, const WordAttentionParams& attention,
                               Pooling pooling);

/// Sentence-level article matrix A (2d x N) is `pooled`; the word-level form
/// concatenates every sentence's hidden states.
inline ChannelEncoding encode_article(const IndexedExample& ex, const Matrix& table,
                                      const BiRecurrentParams& recurrent, const WordAttentionParams& attention) {
  return encode_channel(ex.sentences, table, recurrent, attention, Pooling::Attention);
}

inline ChannelEncoding encode_comments(const IndexedExample& ex, const Matrix& table,
                                       const BiRecurrentParams& recurrent, const WordAttentionParams& attention) {
  return encode_channel(ex.comments, table, recurrent, attention, Pooling::Attention);
}

/// Relevant articles keep their word-level states; `pooled` is their mean.
inline ChannelEncoding encode_relevant(const IndexedExample& ex, const Matrix& table,
                                       const BiRecurrentParams& recurrent, const WordAttentionParams& attention) {
  return encode_channel(ex.relevant, table, recurrent, attention, Pooling::Mean);
}

struct WordLevel {
  Matrix hidden;
  Mask mask;
};

WordLevel word_level(const ChannelEncoding& channel);

/// Backpropagates d(pooled column) for every unit of the channel, adding the
/// table gradient into `d_table` (PAD row untouched).
void encode_channel_backward(const ChannelEncoding& channel, const Matrix& d_pooled,
                             const BiRecurrentParams& recurrent, const WordAttentionParams& attention,
                             BiRecurrentParams& d_recurrent, WordAttentionParams& d_attention, Matrix& d_table);

}  // namespace emif
