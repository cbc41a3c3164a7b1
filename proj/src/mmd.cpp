#include "biflow/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "biflow/error.hpp"
#include "biflow/parallel.hpp"
#include "biflow/random.hpp"

namespace biflow {

namespace {

// Strict upper triangle of an N x N symmetric matrix, row by row.
class PackedUpper {
 public:
  explicit PackedUpper(std::size_t n) : n_(n), data_(n * (n - 1) / 2) {}
  std::size_t size() const noexcept { return n_; }
  std::size_t row_offset(std::size_t i) const noexcept { return i * (2 * n_ - i - 1) / 2; }
  double* row(std::size_t i) noexcept { return data_.data() + row_offset(i); }
  const double* row(std::size_t i) const noexcept { return data_.data() + row_offset(i); }
  std::vector<double>& data() noexcept { return data_; }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

PackedUpper squared_distances(const SampleBatch& x) {
  const std::size_t n = x.count(), d = x.dimension();
  PackedUpper dist(n);
  parallel_for(n, [&](std::size_t i) {
    double* out = dist.row(i);
    const auto xi = x.sample(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto xj = x.sample(j);
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += (xi[k] - xj[k]) * (xi[k] - xj[k]);
      out[j - i - 1] = s;
    }
  });
  return dist;
}

double median_of_squared(std::vector<double> d2) {
  const std::size_t n = d2.size(), mid = n / 2;
  std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
  const double upper = std::sqrt(d2[mid]);
  if (n % 2 == 1) return upper;
  const double lower = std::sqrt(*std::max_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid)));
  return 0.5 * (lower + upper);
}

struct KernelSums {
  std::vector<double> row_sums;  // sum over j != i of K_ij
  double total = 0.0;            // sum over ordered pairs i != j
};

KernelSums kernel_sums(const PackedUpper& k) {
  const std::size_t n = k.size();
  KernelSums s;
  s.row_sums.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = k.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      s.row_sums[i] += r[j - i - 1];
      s.row_sums[j] += r[j - i - 1];
    }
  }
  s.total = std::accumulate(s.row_sums.begin(), s.row_sums.end(), 0.0);
  return s;
}

// Unbiased MMD^2 for the split given by the 0/1 weights in_a.
double split_statistic(const PackedUpper& k, const KernelSums& sums, const std::vector<double>& in_a,
                       std::size_t na, std::size_t nb) {
  const std::size_t n = k.size();
  double s_aa = 0.0, row_a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_a[i] == 0.0) continue;
    row_a += sums.row_sums[i];
    const double* r = k.row(i);
    double s = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) s += r[j - i - 1] * in_a[j];
    s_aa += s;
  }
  s_aa *= 2.0;
  const double s_ab = row_a - s_aa;
  const double s_bb = sums.total - s_aa - 2.0 * s_ab;
  const double fa = static_cast<double>(na), fb = static_cast<double>(nb);
  return s_aa / (fa * (fa - 1.0)) + s_bb / (fb * (fb - 1.0)) - 2.0 * s_ab / (fa * fb);
}

}  // namespace

nlohmann::json MmdEstimate::to_json() const {
  nlohmann::json j = {{"value", value}, {"raw", raw}, {"kernel_bandwidth", kernel_bandwidth}, {"n_a", n_a}, {"n_b", n_b}};
  j["permutation_p"] = permutation_p ? nlohmann::json(*permutation_p) : nlohmann::json(nullptr);
  return j;
}

double median_pairwise_distance(const SampleBatch& x) {
  require(x.count() >= 2, ErrorCode::InsufficientSamples, "median distance needs two samples");
  return median_of_squared(std::move(squared_distances(x).data()));
}

MmdEstimate mmd(const SampleBatch& a, const SampleBatch& b, const MmdOptions& options) {
  require(a.count() >= 2 && b.count() >= 2, ErrorCode::InsufficientSamples, "MMD needs at least two samples per batch");
  require(a.dimension() == b.dimension(), ErrorCode::DimensionMismatch, "MMD batches differ in dimension");
  SampleBatch pooled(a.dimension());
  pooled.reserve(a.count() + b.count());
  for (std::size_t i = 0; i < a.count(); ++i) pooled.push_back(a.sample(i));
  for (std::size_t i = 0; i < b.count(); ++i) pooled.push_back(b.sample(i));

  PackedUpper k = squared_distances(pooled);
  double h = options.bandwidth ? *options.bandwidth : median_of_squared(k.data());
  require(std::isfinite(h) && h >= 0.0, ErrorCode::InvalidArgument, "kernel bandwidth must be non-negative");
  if (h == 0.0) h = 1.0;
  const double scale = -1.0 / (2.0 * h * h);
  for (double& v : k.data()) v = std::exp(v * scale);
  const KernelSums sums = kernel_sums(k);

  const std::size_t na = a.count(), nb = b.count(), n = na + nb;
  std::vector<double> in_a(n, 0.0);
  std::fill(in_a.begin(), in_a.begin() + static_cast<std::ptrdiff_t>(na), 1.0);

  MmdEstimate est;
  est.raw = split_statistic(k, sums, in_a, na, nb);
  est.value = std::max(est.raw, 0.0);
  est.kernel_bandwidth = h;
  est.n_a = na;
  est.n_b = nb;
  if (options.permutations > 0) {
    std::vector<char> exceeds(options.permutations, 0);
    parallel_for(options.permutations, [&](std::size_t p) {
      Rng rng(options.seed, p + 1);
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      shuffle(idx.begin(), idx.end(), rng);
      std::vector<double> w(n, 0.0);
      for (std::size_t i = 0; i < na; ++i) w[idx[i]] = 1.0;
      exceeds[p] = split_statistic(k, sums, w, na, nb) >= est.raw;
    });
    const auto count = std::count(exceeds.begin(), exceeds.end(), 1);
    est.permutation_p = (1.0 + static_cast<double>(count)) / (1.0 + static_cast<double>(options.permutations));
  }
  return est;
}

}  // namespace biflow
