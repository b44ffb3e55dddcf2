#include "emif/encoder.hpp"
#include "emif/errors.hpp"
#include "emif/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace emif {
namespace {

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 0.5) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform_real(rng, -scale, scale);
  return m;
}

LstmParams random_lstm(Rng& rng, int d, int h) {
  return {random_matrix(rng, 4 * h, d), random_matrix(rng, 4 * h, h), random_matrix(rng, 4 * h, 1)};
}

BiRecurrentParams random_bi(Rng& rng, int d) { return {random_lstm(rng, d, d), random_lstm(rng, d, d)}; }

WordAttentionParams random_attention(Rng& rng, int d2) {
  return {random_matrix(rng, d2, d2), random_matrix(rng, d2, 1), random_matrix(rng, d2, 1)};
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Loop-based single LSTM step from zero state.
std::vector<double> lstm_step(const LstmParams& p, const std::vector<double>& x, const std::vector<double>& h_prev,
                              const std::vector<double>& c_prev, std::vector<double>& c_out) {
  const int h = static_cast<int>(p.hidden());
  std::vector<double> z(4 * h);
  for (int r = 0; r < 4 * h; ++r) {
    z[r] = p.bias[r];
    for (std::size_t c = 0; c < x.size(); ++c) z[r] += p.input_weights(r, c) * x[c];
    for (int c = 0; c < h; ++c) z[r] += p.recurrent_weights(r, c) * h_prev[c];
  }
  std::vector<double> out(h);
  c_out.assign(h, 0.0);
  for (int j = 0; j < h; ++j) {
    const double i = logistic(z[j]), f = logistic(z[h + j]), g = std::tanh(z[2 * h + j]), o = logistic(z[3 * h + j]);
    c_out[j] = f * c_prev[j] + i * g;
    out[j] = o * std::tanh(c_out[j]);
  }
  return out;
}

TEST(BiRecurrent, MatchesStepwiseReference) {
  Rng rng(1);
  const int d = 3;
  const BiRecurrentParams p = random_bi(rng, d);
  const Matrix x = random_matrix(rng, d, 3, 1.0);
  const EncodedText enc = bi_recurrent_encode(x, full_mask(3), p);

  auto column = [&](int t) { return std::vector<double>(x.col(t).data(), x.col(t).data() + d); };
  std::vector<double> h(d, 0.0), c(d, 0.0), c_next;
  for (int t = 0; t < 3; ++t) {
    h = lstm_step(p.forward, column(t), h, c, c_next);
    c = c_next;
    for (int j = 0; j < d; ++j) EXPECT_NEAR(enc.hidden(j, t), h[j], 1e-12);
  }
  h.assign(d, 0.0);
  c.assign(d, 0.0);
  for (int t = 2; t >= 0; --t) {
    h = lstm_step(p.backward, column(t), h, c, c_next);
    c = c_next;
    for (int j = 0; j < d; ++j) EXPECT_NEAR(enc.hidden(d + j, t), h[j], 1e-12);
  }
}

TEST(BiRecurrent, ZeroWeightsGiveZeroStates) {
  const int d = 4;
  BiRecurrentParams p{{Matrix::Zero(4 * d, d), Matrix::Zero(4 * d, d), Vector::Zero(4 * d)},
                      {Matrix::Zero(4 * d, d), Matrix::Zero(4 * d, d), Vector::Zero(4 * d)}};
  Rng rng(2);
  const EncodedText enc = bi_recurrent_encode(random_matrix(rng, d, 5), full_mask(5), p);
  EXPECT_EQ(enc.hidden.cwiseAbs().maxCoeff(), 0.0);
}

TEST(BiRecurrent, PadColumnsAreZeroAndSkipped) {
  Rng rng(3);
  const int d = 3;
  const BiRecurrentParams p = random_bi(rng, d);
  const Matrix x = random_matrix(rng, d, 4);
  const EncodedText padded = bi_recurrent_encode(x, {true, true, false, false}, p);
  const EncodedText trimmed = bi_recurrent_encode(x.leftCols(2), full_mask(2), p);
  EXPECT_EQ(padded.hidden.col(2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(padded.hidden.col(3).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT((padded.hidden.leftCols(2) - trimmed.hidden).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(padded.hidden.cwiseAbs().maxCoeff(), 1.0);
}

TEST(BiRecurrent, BackwardMatchesFiniteDifference) {
  Rng rng(4);
  const int d = 3, T = 3;
  BiRecurrentParams p = random_bi(rng, d);
  const Matrix x = random_matrix(rng, d, T, 1.0);
  const Matrix probe = random_matrix(rng, 2 * d, T, 1.0);
  const Mask mask = full_mask(T);
  auto loss = [&](const BiRecurrentParams& q, const Matrix& in) {
    return bi_recurrent_encode(in, mask, q).hidden.cwiseProduct(probe).sum();
  };

  RecurrentTrace trace;
  bi_recurrent_encode(x, mask, p, &trace);
  BiRecurrentParams grads{{Matrix::Zero(4 * d, d), Matrix::Zero(4 * d, d), Vector::Zero(4 * d)},
                          {Matrix::Zero(4 * d, d), Matrix::Zero(4 * d, d), Vector::Zero(4 * d)}};
  const Matrix d_x = bi_recurrent_backward(x, trace, p, probe, grads);

  const double eps = 1e-6;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Matrix hi = x, lo = x;
    hi.data()[i] += eps;
    lo.data()[i] -= eps;
    EXPECT_NEAR(d_x.data()[i], (loss(p, hi) - loss(p, lo)) / (2 * eps), 1e-7);
  }
  for (Eigen::Index i = 0; i < p.forward.recurrent_weights.size(); ++i) {
    BiRecurrentParams hi = p, lo = p;
    hi.forward.recurrent_weights.data()[i] += eps;
    lo.forward.recurrent_weights.data()[i] -= eps;
    EXPECT_NEAR(grads.forward.recurrent_weights.data()[i], (loss(hi, x) - loss(lo, x)) / (2 * eps), 1e-7);
  }
  for (Eigen::Index i = 0; i < p.backward.bias.size(); ++i) {
    BiRecurrentParams hi = p, lo = p;
    hi.backward.bias[i] += eps;
    lo.backward.bias[i] -= eps;
    EXPECT_NEAR(grads.backward.bias[i], (loss(hi, x) - loss(lo, x)) / (2 * eps), 1e-7);
  }
}

TEST(WordAttention, WeightsNormaliseOverRealTokens) {
  Rng rng(5);
  EncodedText enc{random_matrix(rng, 4, 3), {true, true, false}};
  enc.hidden.col(2).setZero();
  const AttentionResult r = word_attention(enc, random_attention(rng, 4));
  EXPECT_NEAR(r.weights.sum(), 1.0, 1e-12);
  EXPECT_EQ(r.weights[2], 0.0);
  EXPECT_LT((r.pooled - enc.hidden * r.weights).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(WordAttention, SingleTokenPoolsToItsState) {
  Rng rng(6);
  const EncodedText enc{random_matrix(rng, 4, 1), {true}};
  const AttentionResult r = word_attention(enc, random_attention(rng, 4));
  EXPECT_DOUBLE_EQ(r.weights[0], 1.0);
  EXPECT_LT((r.pooled - enc.hidden.col(0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(WordAttention, ReferenceScores) {
  Rng rng(7);
  const EncodedText enc{random_matrix(rng, 2, 3), full_mask(3)};
  const WordAttentionParams p = random_attention(rng, 2);
  std::vector<double> scores(3);
  for (int t = 0; t < 3; ++t) {
    double s = 0.0;
    for (int r = 0; r < 2; ++r) {
      double u = p.bias[r];
      for (int c = 0; c < 2; ++c) u += p.weight(r, c) * enc.hidden(c, t);
      s += std::tanh(u) * p.context[r];
    }
    scores[t] = s;
  }
  const double z = std::exp(scores[0]) + std::exp(scores[1]) + std::exp(scores[2]);
  const AttentionResult r = word_attention(enc, p);
  for (int t = 0; t < 3; ++t) EXPECT_NEAR(r.weights[t], std::exp(scores[t]) / z, 1e-14);
}

TEST(WordAttention, BackwardMatchesFiniteDifference) {
  Rng rng(8);
  EncodedText enc{random_matrix(rng, 4, 3), full_mask(3)};
  WordAttentionParams p = random_attention(rng, 4);
  const Vector probe = random_matrix(rng, 4, 1, 1.0);
  auto loss = [&](const EncodedText& e, const WordAttentionParams& q) { return probe.dot(word_attention(e, q).pooled); };
  WordAttentionParams grads{Matrix::Zero(4, 4), Vector::Zero(4), Vector::Zero(4)};
  const Matrix d_hidden = word_attention_backward(enc, word_attention(enc, p), p, probe, grads);
  const double eps = 1e-6;
  for (Eigen::Index i = 0; i < enc.hidden.size(); ++i) {
    EncodedText hi = enc, lo = enc;
    hi.hidden.data()[i] += eps;
    lo.hidden.data()[i] -= eps;
    EXPECT_NEAR(d_hidden.data()[i], (loss(hi, p) - loss(lo, p)) / (2 * eps), 1e-8);
  }
  for (Eigen::Index i = 0; i < p.weight.size(); ++i) {
    WordAttentionParams hi = p, lo = p;
    hi.weight.data()[i] += eps;
    lo.weight.data()[i] -= eps;
    EXPECT_NEAR(grads.weight.data()[i], (loss(enc, hi) - loss(enc, lo)) / (2 * eps), 1e-8);
  }
  for (Eigen::Index i = 0; i < p.context.size(); ++i) {
    WordAttentionParams hi = p, lo = p;
    hi.context[i] += eps;
    lo.context[i] -= eps;
    EXPECT_NEAR(grads.context[i], (loss(enc, hi) - loss(enc, lo)) / (2 * eps), 1e-8);
  }
}

TEST(Embedding, LooksUpRowsAndChecksBounds) {
  Matrix table(3, 2);
  table << 0, 0, 1, 2, 3, 4;
  const IndexSeq tokens{2, 1};
  const Matrix e = embed_tokens(tokens, table);
  EXPECT_EQ(e(0, 0), 3.0);
  EXPECT_EQ(e(1, 1), 2.0);
  const IndexSeq bad{3};
  EXPECT_THROW(embed_tokens(bad, table), BoundsError);
  const IndexSeq negative{-1};
  EXPECT_THROW(embed_tokens(negative, table), BoundsError);
}

TEST(TokenMask, PadIsMasked) {
  const IndexSeq tokens{5, 0, 2};
  EXPECT_EQ(token_mask(tokens), Mask({true, false, true}));
}

TEST(EncodeChannel, AllPadUnitIsDegenerate) {
  Rng rng(9);
  const int d = 2;
  const Matrix table = random_matrix(rng, 5, d);
  const BiRecurrentParams rec = random_bi(rng, d);
  const WordAttentionParams att = random_attention(rng, 2 * d);
  const ChannelEncoding ch = encode_channel({{3, 4}, {0, 0}}, table, rec, att, Pooling::Attention);
  ASSERT_EQ(ch.pooled.cols(), 2);
  EXPECT_EQ(ch.mask, Mask({true, false}));
  EXPECT_TRUE(ch.units[1].degenerate);
  EXPECT_EQ(ch.pooled.col(1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(EncodeChannel, MeanPoolingAveragesRealStates) {
  Rng rng(10);
  const int d = 2;
  const Matrix table = random_matrix(rng, 5, d);
  const BiRecurrentParams rec = random_bi(rng, d);
  const WordAttentionParams att = random_attention(rng, 2 * d);
  const ChannelEncoding ch = encode_channel({{3, 4, 0}}, table, rec, att, Pooling::Mean);
  const Matrix& h = ch.units[0].encoded.hidden;
  EXPECT_LT((ch.pooled.col(0) - (h.col(0) + h.col(1)) / 2.0).cwiseAbs().maxCoeff(), 1e-15);
  const WordLevel words = word_level(ch);
  EXPECT_EQ(words.hidden.cols(), 3);
  EXPECT_EQ(words.mask, Mask({true, true, false}));
}

}  // namespace
}  // namespace emif
