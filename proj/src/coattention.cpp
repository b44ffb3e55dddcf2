#include "emif/coattention.hpp"

#include "emif/errors.hpp"

namespace emif {

namespace {

Mask effective(const Mask& mask, Eigen::Index n) {
  require_shape(static_cast<Eigen::Index>(mask.size()) == n, "co-attention mask length mismatch");
  return any_unmasked(mask) ? mask : full_mask(static_cast<std::size_t>(n));
}

void check_params(const Matrix& news, const Matrix& comments, const CoAttentionParams& p) {
  const Eigen::Index width = news.rows();
  const Eigen::Index k = p.news_proj.rows();
  require_shape(comments.rows() == width, "news and comment representations differ in size");
  require_shape(p.affinity_weight.rows() == width && p.affinity_weight.cols() == width,
                "W_l must be 2d x 2d");
  require_shape(p.news_proj.cols() == width && p.comment_proj.cols() == width && p.comment_proj.rows() == k,
                "W_a and W_c must both be k x 2d");
  require_shape(p.news_score.size() == k && p.comment_score.size() == k, "w_ha and w_hc must have length k");
}

}  // namespace

Vector CoAttentionOutput::joint() const {
  Vector out(news_summary.size() + comment_summary.size());
  out << news_summary, comment_summary;
  return out;
}

Matrix affinity(const Matrix& comments, const Matrix& news, const Matrix& weight) {
  require_shape(weight.rows() == comments.rows() && weight.cols() == news.rows(),
                "affinity: W_l does not match the representation sizes");
  return (comments.transpose() * weight * news).array().tanh().matrix();
}

std::pair<Matrix, Matrix> attention_maps(const Matrix& news, const Matrix& comments, const Matrix& affinity,
                                         const CoAttentionParams& p) {
  check_params(news, comments, p);
  require_shape(affinity.rows() == comments.cols() && affinity.cols() == news.cols(), "F must be M x N");
  const Matrix proj_news = p.news_proj * news;
  const Matrix proj_comments = p.comment_proj * comments;
  Matrix news_map = (proj_news + proj_comments * affinity).array().tanh().matrix();
  Matrix comment_map = (proj_comments + proj_news * affinity.transpose()).array().tanh().matrix();
  return {std::move(news_map), std::move(comment_map)};
}

std::pair<Vector, Vector> attention_values(const Matrix& news_map, const Matrix& comment_map,
                                           const CoAttentionParams& p, const Mask& news_mask,
                                           const Mask& comment_mask) {
  require_shape(news_map.rows() == p.news_score.size() && comment_map.rows() == p.comment_score.size(),
                "attention maps must be k tall");
  const Vector news_logits = news_map.transpose() * p.news_score;
  const Vector comment_logits = comment_map.transpose() * p.comment_score;
  return {masked_softmax(news_logits, effective(news_mask, news_map.cols())),
          masked_softmax(comment_logits, effective(comment_mask, comment_map.cols()))};
}

std::pair<Vector, Vector> attention_values(const Matrix& news_map, const Matrix& comment_map,
                                           const CoAttentionParams& p) {
  return attention_values(news_map, comment_map, p, full_mask(static_cast<std::size_t>(news_map.cols())),
                          full_mask(static_cast<std::size_t>(comment_map.cols())));
}

std::pair<Vector, Vector> attend(const Matrix& news, const Matrix& comments, const Vector& news_weights,
                                 const Vector& comment_weights) {
  require_shape(news.cols() == news_weights.size() && comments.cols() == comment_weights.size(),
                "attend: weight length differs from column count");
  return {news * news_weights, comments * comment_weights};
}

CoAttentionOutput coattend(const Matrix& news, const Matrix& comments, const CoAttentionParams& p,
                           const Mask& news_mask, const Mask& comment_mask) {
  check_params(news, comments, p);
  CoAttentionOutput out;
  out.affinity = affinity(comments, news, p.affinity_weight);
  std::tie(out.news_map, out.comment_map) = attention_maps(news, comments, out.affinity, p);
  std::tie(out.news_weights, out.comment_weights) =
      attention_values(out.news_map, out.comment_map, p, news_mask, comment_mask);
  std::tie(out.news_summary, out.comment_summary) = attend(news, comments, out.news_weights, out.comment_weights);
  return out;
}

CoAttentionOutput coattend(const Matrix& news, const Matrix& comments, const CoAttentionParams& p) {
  return coattend(news, comments, p, full_mask(static_cast<std::size_t>(news.cols())),
                  full_mask(static_cast<std::size_t>(comments.cols())));
}

CoAttentionOutput uniform_attend(const Matrix& news, const Matrix& comments, const Mask& news_mask,
                                 const Mask& comment_mask) {
  auto uniform = [](const Mask& mask) {
    Vector w = Vector::Zero(static_cast<Eigen::Index>(mask.size()));
    const double share = 1.0 / static_cast<double>(count_unmasked(mask));
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) w[static_cast<Eigen::Index>(i)] = share;
    return w;
  };
  CoAttentionOutput out;
  out.news_weights = uniform(effective(news_mask, news.cols()));
  out.comment_weights = uniform(effective(comment_mask, comments.cols()));
  std::tie(out.news_summary, out.comment_summary) = attend(news, comments, out.news_weights, out.comment_weights);
  return out;
}

void coattend_backward(const Matrix& news, const Matrix& comments, const CoAttentionParams& p,
                       const CoAttentionOutput& out, const Vector& d_news_summary, const Vector& d_comment_summary,
                       CoAttentionParams& g, Matrix& d_news, Matrix& d_comments) {
  d_news.noalias() += d_news_summary * out.news_weights.transpose();
  d_comments.noalias() += d_comment_summary * out.comment_weights.transpose();
  const Vector d_news_weights = news.transpose() * d_news_summary;
  const Vector d_comment_weights = comments.transpose() * d_comment_summary;

  const Vector d_news_logits = softmax_backward(out.news_weights, d_news_weights);
  const Vector d_comment_logits = softmax_backward(out.comment_weights, d_comment_weights);
  g.news_score.noalias() += out.news_map * d_news_logits;
  g.comment_score.noalias() += out.comment_map * d_comment_logits;

  const Matrix d_news_pre =
      ((p.news_score * d_news_logits.transpose()).array() * (1.0 - out.news_map.array().square())).matrix();
  const Matrix d_comment_pre =
      ((p.comment_score * d_comment_logits.transpose()).array() * (1.0 - out.comment_map.array().square()))
          .matrix();

  const Matrix proj_news = p.news_proj * news;
  const Matrix proj_comments = p.comment_proj * comments;
  // H_a pre-activation = P_a + P_c F; H_c pre-activation = P_c + P_a F^T.
  const Matrix d_proj_news = d_news_pre + d_comment_pre * out.affinity;
  const Matrix d_proj_comments = d_comment_pre + d_news_pre * out.affinity.transpose();
  const Matrix d_affinity = proj_comments.transpose() * d_news_pre + d_comment_pre.transpose() * proj_news;

  g.news_proj.noalias() += d_proj_news * news.transpose();
  g.comment_proj.noalias() += d_proj_comments * comments.transpose();
  d_news.noalias() += p.news_proj.transpose() * d_proj_news;
  d_comments.noalias() += p.comment_proj.transpose() * d_proj_comments;

  const Matrix d_bilinear = (d_affinity.array() * (1.0 - out.affinity.array().square())).matrix();
  g.affinity_weight.noalias() += comments * d_bilinear * news.transpose();
  d_comments.noalias() += p.affinity_weight * news * d_bilinear.transpose();
  d_news.noalias() += p.affinity_weight.transpose() * comments * d_bilinear;
}

}  // namespace emif
