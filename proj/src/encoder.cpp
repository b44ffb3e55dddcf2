#include "emif/encoder.hpp"

#include "emif/divergence.hpp"
#include "emif/errors.hpp"

#include <string>

namespace emif {

Mask token_mask(std::span<const int> tokens) {
  Mask mask(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) mask[t] = tokens[t] != Vocabulary::kPad;
  return mask;
}

Matrix embed_tokens(std::span<const int> tokens, const Matrix& table) {
  Matrix out(table.cols(), static_cast<Eigen::Index>(tokens.size()));
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const int tok = tokens[t];
    if (tok < 0 || tok >= table.rows())
      throw BoundsError("token index " + std::to_string(tok) + " outside vocabulary of size " +
                        std::to_string(table.rows()));
    out.col(static_cast<Eigen::Index>(t)) = table.row(tok).transpose();
  }
  return out;
}

namespace {

void check_lstm(const LstmParams& p, Eigen::Index input) {
  const Eigen::Index h = p.recurrent_weights.cols();
  require_shape(p.recurrent_weights.rows() == 4 * h && p.input_weights.rows() == 4 * h &&
                    p.bias.size() == 4 * h,
                "LSTM gate blocks must be 4h tall");
  require_shape(p.input_weights.cols() == input, "LSTM input size differs from embedding size");
}

void run_direction(const Matrix& x, const Mask& mask, const LstmParams& p, bool reverse, LstmTrace& trace,
                   Eigen::Ref<Matrix> out) {
  const Eigen::Index h = p.recurrent_weights.cols();
  const auto length = static_cast<Eigen::Index>(mask.size());
  trace.order.clear();
  for (Eigen::Index i = 0; i < length; ++i) {
    const Eigen::Index t = reverse ? length - 1 - i : i;
    if (mask[static_cast<std::size_t>(t)]) trace.order.push_back(t);
  }
  const auto steps = static_cast<Eigen::Index>(trace.order.size());
  trace.gates.resize(4 * h, steps);
  trace.cells.resize(h, steps);
  trace.hiddens.resize(h, steps);

  const Matrix projected = p.input_weights * x;
  Vector h_prev = Vector::Zero(h);
  Vector c_prev = Vector::Zero(h);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index t = trace.order[static_cast<std::size_t>(s)];
    const Vector z = projected.col(t) + p.recurrent_weights * h_prev + p.bias;
    auto gates = trace.gates.col(s);
    gates.segment(0, h) = sigmoid(z.segment(0, h));
    gates.segment(h, h) = sigmoid(z.segment(h, h));
    gates.segment(2 * h, h) = z.segment(2 * h, h).array().tanh().matrix();
    gates.segment(3 * h, h) = sigmoid(z.segment(3 * h, h));
    const Vector c = (gates.segment(h, h).array() * c_prev.array() +
                      gates.segment(0, h).array() * gates.segment(2 * h, h).array())
                         .matrix();
    const Vector hn = (gates.segment(3 * h, h).array() * c.array().tanh()).matrix();
    trace.cells.col(s) = c;
    trace.hiddens.col(s) = hn;
    out.col(t) = hn;
    h_prev = hn;
    c_prev = c;
  }
}

void backprop_direction(const Matrix& x, const LstmTrace& trace, const LstmParams& p,
                        const Eigen::Ref<const Matrix>& d_out, LstmParams& g, Matrix& d_x) {
  const Eigen::Index h = p.recurrent_weights.cols();
  const auto steps = static_cast<Eigen::Index>(trace.order.size());
  if (steps == 0) return;
  Matrix d_z(4 * h, steps);
  Matrix x_steps(x.rows(), steps);
  Vector dh_next = Vector::Zero(h);
  Vector dc_next = Vector::Zero(h);
  const Vector zero = Vector::Zero(h);
  for (Eigen::Index s = steps - 1; s >= 0; --s) {
    const Eigen::Index t = trace.order[static_cast<std::size_t>(s)];
    x_steps.col(s) = x.col(t);
    const auto gates = trace.gates.col(s);
    const auto i = gates.segment(0, h).array();
    const auto f = gates.segment(h, h).array();
    const auto cand = gates.segment(2 * h, h).array();
    const auto o = gates.segment(3 * h, h).array();
    const Vector c_prev = s > 0 ? Vector(trace.cells.col(s - 1)) : zero;
    const Vector h_prev = s > 0 ? Vector(trace.hiddens.col(s - 1)) : zero;
    const Eigen::ArrayXd tc = trace.cells.col(s).array().tanh();

    const Eigen::ArrayXd dh = (d_out.col(t) + dh_next).array();
    const Eigen::ArrayXd dc = dc_next.array() + dh * o * (1.0 - tc.square());
    auto dz = d_z.col(s);
    dz.segment(0, h) = (dc * cand * i * (1.0 - i)).matrix();
    dz.segment(h, h) = (dc * c_prev.array() * f * (1.0 - f)).matrix();
    dz.segment(2 * h, h) = (dc * i * (1.0 - cand.square())).matrix();
    dz.segment(3 * h, h) = (dh * tc * o * (1.0 - o)).matrix();

    g.recurrent_weights.noalias() += dz * h_prev.transpose();
    dh_next.noalias() = p.recurrent_weights.transpose() * dz;
    dc_next = (dc * f).matrix();
  }
  g.bias += d_z.rowwise().sum();
  g.input_weights.noalias() += d_z * x_steps.transpose();
  const Matrix d_steps = p.input_weights.transpose() * d_z;
  for (Eigen::Index s = 0; s < steps; ++s) d_x.col(trace.order[static_cast<std::size_t>(s)]) += d_steps.col(s);
}

}  // namespace

EncodedText bi_recurrent_encode(const Matrix& embeddings, const Mask& mask, const BiRecurrentParams& params,
                                RecurrentTrace* trace) {
  require_shape(embeddings.cols() >= 1, "bi_recurrent_encode needs at least one position");
  require_shape(static_cast<std::size_t>(embeddings.cols()) == mask.size(),
                "bi_recurrent_encode: mask length differs from sequence length");
  check_lstm(params.forward, embeddings.rows());
  check_lstm(params.backward, embeddings.rows());
  require_shape(params.forward.hidden() == params.backward.hidden(),
                "forward and backward hidden sizes differ");

  const Eigen::Index h = params.forward.recurrent_weights.cols();
  EncodedText out;
  out.mask = mask;
  out.hidden = Matrix::Zero(2 * h, embeddings.cols());
  RecurrentTrace local;
  RecurrentTrace& tr = trace != nullptr ? *trace : local;
  run_direction(embeddings, mask, params.forward, false, tr.forward, out.hidden.topRows(h));
  run_direction(embeddings, mask, params.backward, true, tr.backward, out.hidden.bottomRows(h));
  return out;
}

Matrix bi_recurrent_backward(const Matrix& embeddings, const RecurrentTrace& trace,
                             const BiRecurrentParams& params, const Matrix& d_hidden, BiRecurrentParams& grads) {
  const Eigen::Index h = params.forward.recurrent_weights.cols();
  require_shape(d_hidden.rows() == 2 * h && d_hidden.cols() == embeddings.cols(),
                "bi_recurrent_backward: gradient shape mismatch");
  Matrix d_x = Matrix::Zero(embeddings.rows(), embeddings.cols());
  backprop_direction(embeddings, trace.forward, params.forward, d_hidden.topRows(h), grads.forward, d_x);
  backprop_direction(embeddings, trace.backward, params.backward, d_hidden.bottomRows(h), grads.backward, d_x);
  return d_x;
}

AttentionResult word_attention(const EncodedText& encoded, const WordAttentionParams& params) {
  require_shape(params.weight.cols() == encoded.hidden.rows() && params.weight.rows() == encoded.hidden.rows() &&
                    params.bias.size() == encoded.hidden.rows() && params.context.size() == encoded.hidden.rows(),
                "word attention parameters do not match the hidden size");
  if (!any_unmasked(encoded.mask)) throw DegenerateInputError("word attention over a fully masked sequence");
  AttentionResult r;
  r.keys = ((params.weight * encoded.hidden).colwise() + params.bias).array().tanh().matrix();
  const Vector scores = r.keys.transpose() * params.context;
  r.weights = masked_softmax(scores, encoded.mask);
  r.pooled = encoded.hidden * r.weights;
  return r;
}

Matrix word_attention_backward(const EncodedText& encoded, const AttentionResult& r,
                               const WordAttentionParams& params, const Vector& d_pooled,
                               WordAttentionParams& grads) {
  const Vector d_weights = encoded.hidden.transpose() * d_pooled;
  Matrix d_hidden = d_pooled * r.weights.transpose();
  const Vector d_scores = softmax_backward(r.weights, d_weights);
  grads.context.noalias() += r.keys * d_scores;
  const Matrix d_pre =
      ((params.context * d_scores.transpose()).array() * (1.0 - r.keys.array().square())).matrix();
  grads.weight.noalias() += d_pre * encoded.hidden.transpose();
  grads.bias += d_pre.rowwise().sum();
  d_hidden.noalias() += params.weight.transpose() * d_pre;
  return d_hidden;
}

UnitEncoding encode_unit(const IndexSeq& tokens, const Matrix& table, const BiRecurrentParams& recurrent,
                         const WordAttentionParams& attention, Pooling pooling) {
  require_shape(!tokens.empty(), "cannot encode an empty token sequence");
  const Eigen::Index width = 2 * recurrent.forward.recurrent_weights.cols();
  UnitEncoding u;
  u.tokens = tokens;
  const Mask mask = token_mask(tokens);
  u.embedded = embed_tokens(tokens, table);
  if (!any_unmasked(mask)) {
    u.degenerate = true;
    u.encoded.mask = mask;
    u.encoded.hidden = Matrix::Zero(width, static_cast<Eigen::Index>(tokens.size()));
    u.attention.weights = Vector::Zero(static_cast<Eigen::Index>(tokens.size()));
    u.pooled = Vector::Zero(width);
    return u;
  }
  u.encoded = bi_recurrent_encode(u.embedded, mask, recurrent, &u.trace);
  if (pooling == Pooling::Attention) {
    u.attention = word_attention(u.encoded, attention);
    u.pooled = u.attention.pooled;
  } else {
    u.pooled = pool(u.encoded);
  }
  return u;
}

ChannelEncoding encode_channel(const std::vector<IndexSeq>& units, const Matrix& table,
                               const BiRecurrentParams& recurrent, const WordAttentionParams& attention,
                               Pooling pooling) {
  require_shape(!units.empty(), "a text channel needs at least one unit");
  ChannelEncoding ch;
  ch.pooling = pooling;
  const Eigen::Index width = 2 * recurrent.forward.recurrent_weights.cols();
  ch.pooled.resize(width, static_cast<Eigen::Index>(units.size()));
  for (std::size_t i = 0; i < units.size(); ++i) {
    ch.units.push_back(encode_unit(units[i], table, recurrent, attention, pooling));
    ch.pooled.col(static_cast<Eigen::Index>(i)) = ch.units.back().pooled;
    ch.mask.push_back(!ch.units.back().degenerate);
  }
  return ch;
}

WordLevel word_level(const ChannelEncoding& channel) {
  Eigen::Index total = 0;
  for (const auto& u : channel.units) total += u.encoded.hidden.cols();
  WordLevel out;
  out.hidden.resize(channel.pooled.rows(), total);
  Eigen::Index col = 0;
  for (const auto& u : channel.units) {
    out.hidden.middleCols(col, u.encoded.hidden.cols()) = u.encoded.hidden;
    col += u.encoded.hidden.cols();
    out.mask.insert(out.mask.end(), u.encoded.mask.begin(), u.encoded.mask.end());
  }
  return out;
}

void encode_channel_backward(const ChannelEncoding& channel, const Matrix& d_pooled,
                             const BiRecurrentParams& recurrent, const WordAttentionParams& attention,
                             BiRecurrentParams& d_recurrent, WordAttentionParams& d_attention, Matrix& d_table) {
  require_shape(d_pooled.cols() == static_cast<Eigen::Index>(channel.units.size()),
                "channel gradient has the wrong number of columns");
  for (std::size_t i = 0; i < channel.units.size(); ++i) {
    const UnitEncoding& u = channel.units[i];
    const Vector d = d_pooled.col(static_cast<Eigen::Index>(i));
    if (u.degenerate || d.isZero(0.0)) continue;
    Matrix d_hidden;
    if (channel.pooling == Pooling::Attention) {
      d_hidden = word_attention_backward(u.encoded, u.attention, attention, d, d_attention);
    } else {
      d_hidden = pool_backward(u.encoded.mask, d);
    }
    const Matrix d_x = bi_recurrent_backward(u.embedded, u.trace, recurrent, d_hidden, d_recurrent);
    for (std::size_t t = 0; t < u.tokens.size(); ++t) {
      if (u.tokens[t] == Vocabulary::kPad) continue;
      d_table.row(u.tokens[t]) += d_x.col(static_cast<Eigen::Index>(t)).transpose();
    }
  }
}

}  // namespace emif
