#pragma once

#include <functional>
#include <string>
#include <vector>

#include "biflow/linalg.hpp"
#include "biflow/random.hpp"
#include "biflow/sample_batch.hpp"

namespace biflow {

SampleBatch standard_normal(Rng& rng, std::size_t n, std::size_t d);

struct Moments {
  Vector mean;
  Matrix cov;  // unbiased, divides by N - 1
};

Moments empirical_moments(const SampleBatch& batch);

/// Kolmogorov-Smirnov distance between the empirical CDF of samples and cdf.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
  std::size_t in_range = 0;
  std::size_t total = 0;

  /// Writes bin_left,bin_right,count.
  void write_csv(const std::string& path) const;
};

/// Fixed-width bins on [lo, hi); the last bin also takes x == hi.
Histogram histogram(std::span<const double> samples, std::size_t bins, double lo, double hi);

/// 0.5 * sum |count_i / total - p_i|, plus half the sample mass outside the
/// histogram range and half the reference mass not covered by probs.
double total_variation(const Histogram& h, std::span<const double> probs);

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

}  // namespace biflow
