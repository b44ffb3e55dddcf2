#include "emif/gradient_check.hpp"

#include "emif/errors.hpp"
#include "emif/random.hpp"

#include <algorithm>
#include <cmath>

namespace emif {

GradCheckReport gradient_check(const ModelParams& params, const IndexedExample& example,
                               const GradCheckOptions& options) {
  ModelParams analytic = ModelParams::zeros(params.dims);
  backward(params, forward(params, example, options.variant, options.beta), analytic);

  ModelParams probe = params;
  auto probe_tensors = probe.tensors();
  const auto grad_tensors = analytic.tensors();
  auto loss = [&] { return forward(probe, example, options.variant, options.beta).loss.total; };

  GradCheckReport report;
  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    auto& values = probe_tensors[t].values;
    const auto& name = probe_tensors[t].name;
    if (!grad_tensors[t].values.allFinite()) throw NumericError("non-finite analytic gradient in group " + name);
    const double sign = name == options.corrupt_group ? -1.0 : 1.0;
    GroupError group{name, 0.0, static_cast<std::size_t>(values.size())};
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      double& entry = values.data()[i];
      const double saved = entry;
      entry = saved + options.step;
      const double up = loss();
      entry = saved - options.step;
      const double down = loss();
      entry = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      if (!std::isfinite(numeric)) throw NumericError("non-finite numerical gradient in group " + name);
      const double exact = sign * grad_tensors[t].values.data()[i];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
      group.max_relative_error = std::max(group.max_relative_error, std::abs(exact - numeric) / denom);
    }
    if (report.worst_group.empty() || group.max_relative_error > report.max_error) {
      report.max_error = group.max_relative_error;
      report.worst_group = name;
    }
    report.groups.push_back(std::move(group));
  }
  return report;
}

GradCheckFixture make_gradcheck_fixture(std::uint64_t seed) {
  ModelDims dims;
  dims.vocab = 12;
  dims.dim = 4;
  dims.coattention = 3;
  dims.divergence = 3;
  dims.top_k = 2;
  GradCheckFixture fx{ModelParams::initialize(dims, seed), {}};

  // Larger-than-default weights so every pathway carries a visible gradient.
  Rng rng(derive_seed(seed, "gradcheck"));
  for (auto& t : fx.params.tensors())
    for (Eigen::Index i = 0; i < t.values.size(); ++i) t.values.data()[i] += uniform_real(rng, -0.3, 0.3);
  fx.params.embedding.row(Vocabulary::kPad).setZero();

  auto token = [&rng, &dims] { return 2 + static_cast<int>(uniform_index(rng, dims.vocab - 2)); };
  auto unit = [&](std::size_t n) {
    IndexSeq s(n);
    for (auto& t : s) t = token();
    return s;
  };
  fx.example.id = "gradcheck";
  fx.example.label = 1;
  fx.example.sentences = {unit(3), unit(3)};
  fx.example.comments = {unit(3), unit(3)};
  fx.example.relevant = {unit(3), unit(3), unit(3)};
  return fx;
}

}  // namespace emif
