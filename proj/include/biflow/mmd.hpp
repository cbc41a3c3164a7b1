#pragma once

#include <cstdint>
#include <optional>

#include <json.hpp>

#include "biflow/sample_batch.hpp"

namespace biflow {

struct MmdEstimate {
  double value = 0.0;  // max(raw, 0)
  double raw = 0.0;    // unbiased MMD^2, may be slightly negative
  double kernel_bandwidth = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::optional<double> permutation_p;

  nlohmann::json to_json() const;
};

struct MmdOptions {
  /// Gaussian kernel width; median pairwise distance of the pooled sample
  /// when unset.
  std::optional<double> bandwidth;
  /// 0 skips the permutation test.
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
};

/// Unbiased MMD^2 with kernel exp(-|x - y|^2 / (2 h^2)). The permutation
/// p-value is (1 + #{permuted >= observed}) / (1 + permutations).
MmdEstimate mmd(const SampleBatch& a, const SampleBatch& b, const MmdOptions& options = {});

/// Median of |x_i - x_j| over all pairs i < j.
double median_pairwise_distance(const SampleBatch& x);

}  // namespace biflow
