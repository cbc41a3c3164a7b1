#include "biflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "biflow/error.hpp"
#include "biflow/io.hpp"

namespace biflow {

SampleBatch standard_normal(Rng& rng, std::size_t n, std::size_t d) {
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one sample");
  require(d >= 1, ErrorCode::InvalidArgument, "dimension must be positive");
  std::vector<double> v(n * d);
  for (double& x : v) x = rng.normal();
  return SampleBatch(d, n, std::move(v));
}

Moments empirical_moments(const SampleBatch& batch) {
  const std::size_t n = batch.count(), d = batch.dimension();
  require(n >= 2, ErrorCode::InsufficientSamples, "moments need at least two samples");
  Moments m{Vector(d, 0.0), Matrix(d, d)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += batch(i, j);
  for (double& v : m.mean) v /= static_cast<double>(n);
  Vector c(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) c[j] = batch(i, j) - m.mean[j];
    for (std::size_t j = 0; j < d; ++j) {
      auto row = m.cov.row(j);
      for (std::size_t k = j; k < d; ++k) row[k] += c[j] * c[k];
    }
  }
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = j; k < d; ++k) {
      m.cov(j, k) /= static_cast<double>(n - 1);
      m.cov(k, j) = m.cov(j, k);
    }
  return m;
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  require(!samples.empty(), ErrorCode::InsufficientSamples, "KS statistic of an empty sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

Histogram histogram(std::span<const double> samples, std::size_t bins, double lo, double hi) {
  require(bins >= 1, ErrorCode::InvalidArgument, "histogram needs at least one bin");
  require(hi > lo, ErrorCode::InvalidArgument, "histogram range is empty");
  Histogram h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  h.total = samples.size();
  for (double x : samples) {
    if (!(x >= lo && x <= hi)) continue;
    auto b = static_cast<std::size_t>((x - lo) / width);
    b = std::min(b, bins - 1);
    ++h.counts[b];
    ++h.in_range;
  }
  return h;
}

void Histogram::write_csv(const std::string& path) const {
  std::string text = "bin_left,bin_right,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i)
    text += format_double(edges[i]) + ',' + format_double(edges[i + 1]) + ',' +
            std::to_string(counts[i]) + '\n';
  write_text(path, text);
}

double total_variation(const Histogram& h, std::span<const double> probs) {
  require(probs.size() == h.counts.size(), ErrorCode::DimensionMismatch,
          "reference probabilities do not match bins");
  require(h.total > 0, ErrorCode::InsufficientSamples, "empty histogram");
  const double n = static_cast<double>(h.total);
  double tv = 0.0, covered = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    tv += std::abs(static_cast<double>(h.counts[i]) / n - probs[i]);
    covered += probs[i];
  }
  tv += static_cast<double>(h.total - h.in_range) / n;
  tv += std::max(0.0, 1.0 - covered);
  return 0.5 * tv;
}

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

}  // namespace biflow
