#include "emif/optimizer.hpp"

#include "emif/errors.hpp"

#include <cmath>
#include <string>

namespace emif {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "sgd" || name == "gd") return OptimizerKind::GradientDescent;
  throw ValidationError("unknown optimizer '" + std::string(name) + "'");
}

void GradientDescent::step(ModelParams& params, const ModelParams& grads) {
  auto p = params.tensors();
  const auto g = grads.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) p[i].values -= learning_rate_ * g[i].values;
  params.embedding.row(Vocabulary::kPad).setZero();
}

Adam::Adam(const ModelDims& dims, double learning_rate, double beta1, double beta2, double epsilon)
    : learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      first_(ModelParams::zeros(dims)),
      second_(ModelParams::zeros(dims)) {}

void Adam::step(ModelParams& params, const ModelParams& grads) {
  ++steps_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m = first_.tensors();
  auto v = second_.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i].values = beta1_ * m[i].values + (1.0 - beta1_) * g[i].values;
    v[i].values = beta2_ * v[i].values + (1.0 - beta2_) * g[i].values.cwiseAbs2();
    p[i].values.array() -= learning_rate_ * (m[i].values.array() / correction1) /
                            ((v[i].values.array() / correction2).sqrt() + epsilon_);
  }
  params.embedding.row(Vocabulary::kPad).setZero();
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, const ModelDims& dims, double learning_rate) {
  if (kind == OptimizerKind::Adam) return std::make_unique<Adam>(dims, learning_rate);
  return std::make_unique<GradientDescent>(learning_rate);
}

}  // namespace emif
