#include "emif/fusion.hpp"

#include "emif/errors.hpp"

#include <algorithm>
#include <cmath>

namespace emif {

KlTerms inconsistency_terms(const Vector& evidence, const Vector& joint, const Matrix& projection) {
  require_shape(projection.cols() == evidence.size() && projection.rows() == joint.size(),
                "inconsistency loss: projection must be |joint| x |evidence|");
  KlTerms t;
  t.evidence_logits = projection * evidence;
  t.evidence_log = log_softmax(t.evidence_logits);
  t.joint_log = log_softmax(joint);
  t.evidence_dist = t.evidence_log.array().exp().matrix();
  t.joint_dist = t.joint_log.array().exp().matrix();
  // Log-softmax keeps the terms finite without relying on the floor.
  t.value = std::max(0.0, t.evidence_dist.dot(t.evidence_log - t.joint_log));
  return t;
}

double inconsistency_loss(const Vector& evidence, const Vector& joint, const Matrix& projection) {
  return inconsistency_terms(evidence, joint, projection).value;
}

double kl_divergence(const Vector& p, const Vector& q) {
  require_shape(p.size() == q.size(), "kl_divergence: length mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    sum += p[i] * (std::log(std::max(p[i], kProbabilityFloor)) - std::log(std::max(q[i], kProbabilityFloor)));
  }
  return sum;
}

void inconsistency_backward(const KlTerms& t, const Vector& evidence, const Matrix& projection, double scale,
                            Vector& d_evidence, Vector& d_joint, Matrix& d_projection) {
  const Vector log_ratio = t.evidence_log - t.joint_log;
  const Vector d_logits = scale * (t.evidence_dist.array() * (log_ratio.array() - t.value)).matrix();
  d_projection.noalias() += d_logits * evidence.transpose();
  d_evidence.noalias() += projection.transpose() * d_logits;
  d_joint += scale * (t.joint_dist - t.evidence_dist);
}

Vector classifier_input(const Vector& joint, const Vector& evidence) {
  Vector x(joint.size() + evidence.size());
  x << joint, evidence;
  return x;
}

Vector classify(const Vector& joint, const Vector& evidence, const FusionParams& p) {
  require_shape(p.classifier_weight.rows() == 2 && p.classifier_bias.size() == 2,
                "classifier must produce two logits");
  require_shape(p.classifier_weight.cols() == joint.size() + evidence.size(),
                "classifier width differs from |joint| + |evidence|");
  return softmax(p.classifier_weight * classifier_input(joint, evidence) + p.classifier_bias);
}

double cross_entropy(const Vector& probs, int label) {
  if (label < 0 || label >= probs.size()) throw ValidationError("label outside the probability vector");
  return -std::log(std::max(probs[label], kProbabilityFloor));
}

LossBreakdown joint_loss(double kl, double ce, double beta) {
  return LossBreakdown{kl, ce, beta * kl + ce, beta};
}

}  // namespace emif
