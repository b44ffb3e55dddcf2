#include "emif/model.hpp"

#include "emif/errors.hpp"
#include "emif/random.hpp"

#include <cmath>
#include <string>

namespace emif {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "FULL";
    case Variant::NoRelevant: return "NO_R";
    case Variant::NoComments: return "NO_C";
    case Variant::NoCoAttention: return "NO_CA";
    case Variant::NoInconsistency: return "NO_IL";
  }
  return "FULL";
}

Variant parse_variant(std::string_view name) {
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Variant v : kAllVariants)
    if (to_string(v) == upper) return v;
  throw ValidationError("unknown variant '" + std::string(name) + "'");
}

namespace {

constexpr const char* kChannelNames[] = {"news", "comments", "relevant"};

template <class Self, class F>
void visit(Self& p, F&& f) {
  f(std::string("embedding"), p.embedding);
  for (std::size_t e = 0; e < p.encoders.size(); ++e) {
    const std::string prefix =
        p.encoders.size() == 1 ? std::string("encoder.") : "encoder." + std::string(kChannelNames[e]) + ".";
    auto& enc = p.encoders[e];
    for (auto [dir, lstm] : {std::pair{"forward.", &enc.forward}, std::pair{"backward.", &enc.backward}}) {
      f(prefix + dir + "input_weights", lstm->input_weights);
      f(prefix + dir + "recurrent_weights", lstm->recurrent_weights);
      f(prefix + dir + "bias", lstm->bias);
    }
  }
  f(std::string("word_attention.weight"), p.word_attention.weight);
  f(std::string("word_attention.bias"), p.word_attention.bias);
  f(std::string("word_attention.context"), p.word_attention.context);
  f(std::string("coattention.affinity_weight"), p.coattention.affinity_weight);
  f(std::string("coattention.news_proj"), p.coattention.news_proj);
  f(std::string("coattention.comment_proj"), p.coattention.comment_proj);
  f(std::string("coattention.news_score"), p.coattention.news_score);
  f(std::string("coattention.comment_score"), p.coattention.comment_score);
  f(std::string("divergence.news_weight"), p.divergence.news_weight);
  f(std::string("divergence.news_bias"), p.divergence.news_bias);
  f(std::string("divergence.relevant_weight"), p.divergence.relevant_weight);
  f(std::string("divergence.relevant_bias"), p.divergence.relevant_bias);
  f(std::string("fusion.classifier_weight"), p.fusion.classifier_weight);
  f(std::string("fusion.classifier_bias"), p.fusion.classifier_bias);
  f(std::string("fusion.projection"), p.fusion.projection);
}

void fill_uniform(Eigen::Ref<Matrix> m, Rng& rng, double bound) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = uniform_real(rng, -bound, bound);
}

void fill_uniform(Vector& v, Rng& rng, double bound) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uniform_real(rng, -bound, bound);
}

}  // namespace

ModelParams ModelParams::zeros(const ModelDims& dims) {
  if (dims.vocab < 2 || dims.dim < 1 || dims.coattention < 1 || dims.divergence < 1 || dims.top_k < 1)
    throw ValidationError("model dimensions must be positive and the vocabulary must hold PAD and UNK");
  const auto V = static_cast<Eigen::Index>(dims.vocab);
  const auto d = static_cast<Eigen::Index>(dims.dim);
  const auto k = static_cast<Eigen::Index>(dims.coattention);
  const auto h = static_cast<Eigen::Index>(dims.divergence);
  const auto K = static_cast<Eigen::Index>(dims.top_k);

  ModelParams p;
  p.dims = dims;
  p.embedding = Matrix::Zero(V, d);
  auto lstm = [d] {
    return LstmParams{Matrix::Zero(4 * d, d), Matrix::Zero(4 * d, d), Vector::Zero(4 * d)};
  };
  p.encoders.resize(dims.shared_encoder ? 1 : 3);
  for (auto& e : p.encoders) e = BiRecurrentParams{lstm(), lstm()};
  p.word_attention = {Matrix::Zero(2 * d, 2 * d), Vector::Zero(2 * d), Vector::Zero(2 * d)};
  p.coattention = {Matrix::Zero(2 * d, 2 * d), Matrix::Zero(k, 2 * d), Matrix::Zero(k, 2 * d), Vector::Zero(k),
                   Vector::Zero(k)};
  p.divergence = {Matrix::Zero(h, 2 * d), Vector::Zero(h), Matrix::Zero(h, 2 * d), Vector::Zero(h), dims.activation};
  p.fusion = {Matrix::Zero(2, 4 * d + 2 * d * K), Vector::Zero(2), Matrix::Zero(4 * d, 2 * d * K)};
  return p;
}

ModelParams ModelParams::initialize(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p = zeros(dims);
  Rng rng(seed);
  const double d = static_cast<double>(dims.dim);
  const double rec = 1.0 / std::sqrt(d);
  const double wide = 1.0 / std::sqrt(2.0 * d);

  fill_uniform(p.embedding, rng, 0.1);
  p.embedding.row(Vocabulary::kPad).setZero();
  for (auto& enc : p.encoders) {
    for (LstmParams* lstm : {&enc.forward, &enc.backward}) {
      fill_uniform(lstm->input_weights, rng, rec);
      fill_uniform(lstm->recurrent_weights, rng, rec);
      lstm->bias.setZero();
      lstm->bias.segment(static_cast<Eigen::Index>(dims.dim), static_cast<Eigen::Index>(dims.dim)).setOnes();
    }
  }
  fill_uniform(p.word_attention.weight, rng, wide);
  fill_uniform(p.word_attention.context, rng, wide);
  fill_uniform(p.coattention.affinity_weight, rng, wide);
  fill_uniform(p.coattention.news_proj, rng, wide);
  fill_uniform(p.coattention.comment_proj, rng, wide);
  fill_uniform(p.coattention.news_score, rng, wide);
  fill_uniform(p.coattention.comment_score, rng, wide);
  fill_uniform(p.divergence.news_weight, rng, wide);
  fill_uniform(p.divergence.relevant_weight, rng, wide);
  fill_uniform(p.fusion.classifier_weight, rng, 1.0 / std::sqrt(static_cast<double>(p.fusion.classifier_weight.cols())));
  fill_uniform(p.fusion.projection, rng, 1.0 / std::sqrt(static_cast<double>(p.fusion.projection.cols())));
  return p;
}

const BiRecurrentParams& ModelParams::encoder(Channel c) const {
  return encoders.size() == 1 ? encoders.front() : encoders.at(static_cast<std::size_t>(c));
}

BiRecurrentParams& ModelParams::encoder(Channel c) {
  return encoders.size() == 1 ? encoders.front() : encoders.at(static_cast<std::size_t>(c));
}

std::vector<ParamTensor> ModelParams::tensors() {
  std::vector<ParamTensor> out;
  visit(*this, [&out](std::string name, auto& t) {
    out.push_back(ParamTensor{std::move(name), Eigen::Map<Matrix>(t.data(), t.rows(), t.cols())});
  });
  return out;
}

std::vector<ConstParamTensor> ModelParams::tensors() const {
  std::vector<ConstParamTensor> out;
  visit(*this, [&out](std::string name, const auto& t) {
    out.push_back(ConstParamTensor{std::move(name), Eigen::Map<const Matrix>(t.data(), t.rows(), t.cols())});
  });
  return out;
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors())
    if (!t.values.allFinite()) return false;
  return true;
}

void ModelParams::set_zero() {
  for (auto& t : tensors()) t.values.setZero();
}

// ---------------------------------------------------------------------------

namespace {

Vector masked_column_mean(const Matrix& columns, const Mask& mask, Vector* weights_out = nullptr) {
  Mask use = any_unmasked(mask) ? mask : full_mask(mask.size());
  Vector w = Vector::Zero(columns.cols());
  const double share = 1.0 / static_cast<double>(count_unmasked(use));
  for (std::size_t i = 0; i < use.size(); ++i)
    if (use[i]) w[static_cast<Eigen::Index>(i)] = share;
  if (weights_out != nullptr) *weights_out = w;
  return columns * w;
}

Vector stack(const Vector& top, const Vector& bottom) {
  Vector out(top.size() + bottom.size());
  out << top, bottom;
  return out;
}

}  // namespace

ForwardPass forward(const ModelParams& params, const IndexedExample& example, Variant variant, double beta) {
  if (example.label != 0 && example.label != 1) throw ValidationError("example label outside {0,1}");
  const auto d = static_cast<Eigen::Index>(params.dims.dim);
  const auto K = static_cast<Eigen::Index>(params.dims.top_k);

  ForwardPass f;
  f.variant = variant;
  f.label = example.label;
  f.beta = variant == Variant::NoInconsistency ? 0.0 : beta;

  f.news = encode_article(example, params.embedding, params.encoder(Channel::News), params.word_attention);
  const WordLevel words = word_level(f.news);
  f.news_words_pooled = any_unmasked(words.mask) ? pool(EncodedText{words.hidden, words.mask}) : Vector::Zero(2 * d);

  switch (variant) {
    case Variant::NoComments:
      f.news_mean = masked_column_mean(f.news.pooled, f.news.mask, &f.coattention.news_weights);
      f.joint = stack(f.news_mean, Vector::Zero(2 * d));
      f.kl_joint = stack(f.news_mean, f.news_mean);
      break;
    case Variant::NoCoAttention:
      f.comments = encode_comments(example, params.embedding, params.encoder(Channel::Comments), params.word_attention);
      f.coattention = uniform_attend(f.news.pooled, f.comments.pooled, f.news.mask, f.comments.mask);
      f.joint = f.coattention.joint();
      f.kl_joint = f.joint;
      break;
    default:
      f.comments = encode_comments(example, params.embedding, params.encoder(Channel::Comments), params.word_attention);
      f.coattention = coattend(f.news.pooled, f.comments.pooled, params.coattention, f.news.mask, f.comments.mask);
      f.joint = f.coattention.joint();
      f.kl_joint = f.joint;
      break;
  }

  if (f.uses_relevant()) {
    f.relevant = encode_relevant(example, params.embedding, params.encoder(Channel::Relevant), params.word_attention);
    f.similarity = similarity_scores(f.news_words_pooled, f.relevant.pooled, params.divergence);
    f.evidence = select_top_k_divergent(f.similarity, f.relevant.pooled, static_cast<int>(K));
    f.evidence_input = f.evidence.concatenated;
    f.kl = inconsistency_terms(f.evidence.concatenated, f.kl_joint, params.fusion.projection);
  } else {
    f.evidence_input = Vector::Zero(2 * d * K);
  }

  f.probs = classify(f.joint, f.evidence_input, params.fusion);
  f.loss = joint_loss(f.uses_relevant() ? f.kl.value : 0.0, cross_entropy(f.probs, f.label), f.beta);
  return f;
}

void backward(const ModelParams& params, const ForwardPass& f, ModelParams& g) {
  const auto d = static_cast<Eigen::Index>(params.dims.dim);
  const auto width = 2 * d;

  Vector d_logits = f.probs;
  d_logits[f.label] -= 1.0;
  const Vector x = classifier_input(f.joint, f.evidence_input);
  g.fusion.classifier_weight.noalias() += d_logits * x.transpose();
  g.fusion.classifier_bias += d_logits;
  const Vector d_x = params.fusion.classifier_weight.transpose() * d_logits;
  Vector d_joint = d_x.head(f.joint.size());
  Vector d_evidence = Vector::Zero(f.evidence_input.size());
  Vector d_kl_joint = Vector::Zero(f.kl_joint.size());

  if (f.uses_relevant()) {
    d_evidence = d_x.tail(f.evidence_input.size());
    if (f.beta != 0.0)
      inconsistency_backward(f.kl, f.evidence.concatenated, params.fusion.projection, f.beta, d_evidence, d_kl_joint,
                             g.fusion.projection);
  }

  Matrix d_news = Matrix::Zero(f.news.pooled.rows(), f.news.pooled.cols());
  Matrix d_comments;
  switch (f.variant) {
    case Variant::NoComments: {
      const Vector d_mean = d_joint.head(width) + d_kl_joint.head(width) + d_kl_joint.tail(width);
      d_news.noalias() += d_mean * f.coattention.news_weights.transpose();
      break;
    }
    case Variant::NoCoAttention: {
      const Vector total = d_joint + d_kl_joint;
      d_comments = total.tail(width) * f.coattention.comment_weights.transpose();
      d_news.noalias() += total.head(width) * f.coattention.news_weights.transpose();
      break;
    }
    default: {
      const Vector total = d_joint + d_kl_joint;
      d_comments = Matrix::Zero(f.comments.pooled.rows(), f.comments.pooled.cols());
      coattend_backward(f.news.pooled, f.comments.pooled, params.coattention, f.coattention, total.head(width),
                        total.tail(width), g.coattention, d_news, d_comments);
      break;
    }
  }

  encode_channel_backward(f.news, d_news, params.encoder(Channel::News), params.word_attention,
                          g.encoder(Channel::News), g.word_attention, g.embedding);
  if (f.uses_comments())
    encode_channel_backward(f.comments, d_comments, params.encoder(Channel::Comments), params.word_attention,
                            g.encoder(Channel::Comments), g.word_attention, g.embedding);
  if (f.uses_relevant()) {
    Matrix d_relevant = Matrix::Zero(f.relevant.pooled.rows(), f.relevant.pooled.cols());
    for (std::size_t i = 0; i < f.evidence.indices.size(); ++i)
      d_relevant.col(static_cast<Eigen::Index>(f.evidence.indices[i])) +=
          d_evidence.segment(static_cast<Eigen::Index>(i) * width, width);
    encode_channel_backward(f.relevant, d_relevant, params.encoder(Channel::Relevant), params.word_attention,
                            g.encoder(Channel::Relevant), g.word_attention, g.embedding);
  }
  g.embedding.row(Vocabulary::kPad).setZero();
}

}  // namespace emif
