#pragma once

#include "emif/tensor.hpp"

namespace emif {

/// Classifier over [joint; evidence] plus the projection that maps the
/// 2dK evidence vector into the 4d space the inconsistency loss compares in.
struct FusionParams {
  Matrix classifier_weight;  // W_p: 2 x (4d + 2dK)
  Vector classifier_bias;    // b_p: 2
  Matrix projection;         // P: 4d x 2dK
};

struct LossBreakdown {
  double kl = 0.0;
  double ce = 0.0;
  double total = 0.0;
  double beta = 1.0;
};

inline constexpr double kProbabilityFloor = 1e-12;

/// Both sides of the inconsistency loss, softmax-normalised.
struct KlTerms {
  Vector evidence_logits;  // P a'
  Vector evidence_dist;    // softmax(P a')
  Vector joint_dist;       // softmax([A_hat; C_hat])
  Vector evidence_log;
  Vector joint_log;
  double value = 0.0;
};

/// D_KL(softmax(P a') || softmax(joint)) in nats.
KlTerms inconsistency_terms(const Vector& evidence, const Vector& joint, const Matrix& projection);
double inconsistency_loss(const Vector& evidence, const Vector& joint, const Matrix& projection);

/// KL between two already-normalised distributions, with the probability
/// floor applied inside the logarithm.
double kl_divergence(const Vector& p, const Vector& q);

/// Gradients of `scale * KL` with respect to the evidence and joint vectors;
/// the projection gradient is accumulated into `d_projection`.
void inconsistency_backward(const KlTerms& terms, const Vector& evidence, const Matrix& projection, double scale,
                            Vector& d_evidence, Vector& d_joint, Matrix& d_projection);

Vector classifier_input(const Vector& joint, const Vector& evidence);

/// p = softmax(W_p [joint; evidence] + b_p).
Vector classify(const Vector& joint, const Vector& evidence, const FusionParams& params);

/// -ln p[label], with p[label] floored at 1e-12.
double cross_entropy(const Vector& probs, int label);

LossBreakdown joint_loss(double kl, double ce, double beta);

}  // namespace emif
