#pragma once

#include "emif/model.hpp"

#include <memory>
#include <string_view>

namespace emif {

enum class OptimizerKind { GradientDescent, Adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(ModelParams& params, const ModelParams& grads) = 0;
};

class GradientDescent final : public Optimizer {
 public:
  explicit GradientDescent(double learning_rate) : learning_rate_(learning_rate) {}
  void step(ModelParams& params, const ModelParams& grads) override;

 private:
  double learning_rate_;
};

/// Adaptive moment estimation with bias-corrected first and second moments.
class Adam final : public Optimizer {
 public:
  Adam(const ModelDims& dims, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
  void step(ModelParams& params, const ModelParams& grads) override;

 private:
  double learning_rate_;
  double beta1_;
  double beta2_;
  double epsilon_;
  long steps_ = 0;
  ModelParams first_;
  ModelParams second_;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, const ModelDims& dims, double learning_rate);

}  // namespace emif
