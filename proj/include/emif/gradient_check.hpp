#pragma once

#include "emif/corpus.hpp"
#include "emif/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace emif {

struct GradCheckOptions {
  double step = 1e-4;
  Variant variant = Variant::Full;
  double beta = 1.0;
  /// Fault injection: flip the sign of this group's analytic gradient.
  std::string corrupt_group;
};

struct GroupError {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t entries = 0;
};

struct GradCheckReport {
  std::vector<GroupError> groups;
  double max_error = 0.0;
  std::string worst_group;
};

/// Compares the analytic gradient of the total loss with central differences,
/// entry by entry. Relative error is |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
GradCheckReport gradient_check(const ModelParams& params, const IndexedExample& example,
                               const GradCheckOptions& options = {});

struct GradCheckFixture {
  ModelParams params;
  IndexedExample example;
};

/// d=4, k=3, h=3, K=2 model with a random N=2, n=3, M=2, R=3 example.
GradCheckFixture make_gradcheck_fixture(std::uint64_t seed);

}  // namespace emif
