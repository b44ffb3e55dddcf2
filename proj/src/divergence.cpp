#include "emif/divergence.hpp"

#include "emif/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace emif {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  return "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "identity") return Activation::Identity;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

Vector pool(const EncodedText& encoded) {
  require_shape(static_cast<std::size_t>(encoded.hidden.cols()) == encoded.mask.size(),
                "pool: mask length differs from sequence length");
  const std::size_t count = count_unmasked(encoded.mask);
  if (count == 0) throw DegenerateInputError("pool over a fully masked sequence");
  Vector sum = Vector::Zero(encoded.hidden.rows());
  for (std::size_t t = 0; t < encoded.mask.size(); ++t)
    if (encoded.mask[t]) sum += encoded.hidden.col(static_cast<Eigen::Index>(t));
  return sum / static_cast<double>(count);
}

Vector pool(const Matrix& columns) {
  if (columns.cols() == 0) throw DegenerateInputError("pool over an empty sequence");
  return columns.rowwise().mean();
}

Matrix pool_backward(const Mask& mask, const Vector& d_pooled) {
  const double count = static_cast<double>(count_unmasked(mask));
  Matrix d = Matrix::Zero(d_pooled.size(), static_cast<Eigen::Index>(mask.size()));
  for (std::size_t t = 0; t < mask.size(); ++t)
    if (mask[t]) d.col(static_cast<Eigen::Index>(t)) = d_pooled / count;
  return d;
}

Vector apply_activation(Activation a, const Vector& x) {
  switch (a) {
    case Activation::Tanh: return x.array().tanh().matrix();
    case Activation::Relu: return x.cwiseMax(0.0);
    case Activation::Identity: return x;
  }
  return x;
}

Vector similarity_logits(const Vector& news, const Matrix& relevant, const DivergenceParams& p) {
  require_shape(relevant.cols() >= 1, "similarity needs at least one relevant article");
  require_shape(p.news_weight.cols() == news.size() && p.relevant_weight.cols() == relevant.rows() &&
                    p.news_weight.rows() == p.relevant_weight.rows() && p.news_bias.size() == p.news_weight.rows() &&
                    p.relevant_bias.size() == p.relevant_weight.rows(),
                "divergence parameters do not match the representation sizes");
  const Vector u = apply_activation(p.activation, p.news_weight * news + p.news_bias);
  Vector logits(relevant.cols());
  for (Eigen::Index r = 0; r < relevant.cols(); ++r) {
    const Vector ur = apply_activation(p.activation, p.relevant_weight * relevant.col(r) + p.relevant_bias);
    logits[r] = u.dot(ur);
  }
  return logits;
}

Vector similarity_scores(const Vector& news, const Matrix& relevant, const DivergenceParams& p) {
  return softmax(similarity_logits(news, relevant, p));
}

SelectedEvidence select_top_k_divergent(const Vector& similarity, const Matrix& relevant, int k) {
  if (k <= 0) throw ValidationError("top-K selection needs K >= 1");
  require_shape(similarity.size() == relevant.cols(), "similarity length differs from relevant count");
  std::vector<std::size_t> order(static_cast<std::size_t>(similarity.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return similarity[static_cast<Eigen::Index>(a)] < similarity[static_cast<Eigen::Index>(b)];
  });
  const auto keep = std::min<std::size_t>(order.size(), static_cast<std::size_t>(k));
  SelectedEvidence out;
  out.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
  const Eigen::Index width = relevant.rows();
  out.concatenated = Vector::Zero(width * k);
  for (std::size_t i = 0; i < keep; ++i)
    out.concatenated.segment(static_cast<Eigen::Index>(i) * width, width) =
        relevant.col(static_cast<Eigen::Index>(out.indices[i]));
  return out;
}

}  // namespace emif
