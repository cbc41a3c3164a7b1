#include "biflow/polynomial_basis.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>

#include "biflow/error.hpp"

namespace biflow {

MultiIndexSet::MultiIndexSet(std::size_t dimension, std::size_t max_total_order,
                             const std::vector<std::vector<std::uint32_t>>& indices)
    : dim_(dimension), order_(max_total_order) {
  require(dimension > 0, ErrorCode::InvalidArgument, "multi-index dimension must be positive");
  bool has_zero = false;
  for (const auto& idx : indices) {
    require(idx.size() == dimension, ErrorCode::BadModel, "multi-index has wrong length");
    const auto total = std::accumulate(idx.begin(), idx.end(), std::size_t{0});
    require(total <= max_total_order, ErrorCode::BadModel, "multi-index exceeds the total order");
    has_zero = has_zero || total == 0;
    flat_.insert(flat_.end(), idx.begin(), idx.end());
  }
  require(has_zero, ErrorCode::BadModel, "multi-index set lacks the constant term");
}

MultiIndexSet MultiIndexSet::total_order(std::size_t dimension, std::size_t max_total_order) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> cur(dimension, 0);
  // Tuples of exact total t, first variable varying slowest.
  auto emit = [&](auto&& self, std::size_t var, std::size_t remaining) -> void {
    if (var + 1 == dimension) {
      cur[var] = static_cast<std::uint32_t>(remaining);
      out.push_back(cur);
      return;
    }
    for (std::size_t e = remaining + 1; e-- > 0;) {
      cur[var] = static_cast<std::uint32_t>(e);
      self(self, var + 1, remaining - e);
    }
  };
  for (std::size_t t = 0; t <= max_total_order; ++t) emit(emit, 0, t);
  return MultiIndexSet(dimension, max_total_order, out);
}

std::vector<std::vector<std::uint32_t>> MultiIndexSet::to_vectors() const {
  std::vector<std::vector<std::uint32_t>> out;
  for (std::size_t i = 0; i < size(); ++i) {
    auto idx = (*this)[i];
    out.emplace_back(idx.begin(), idx.end());
  }
  return out;
}

void hermite_values(double x, std::size_t order, std::span<double> out) {
  out[0] = 1.0;
  if (order == 0) return;
  out[1] = x;
  for (std::size_t k = 1; k < order; ++k)
    out[k + 1] = x * out[k] - static_cast<double>(k) * out[k - 1];
}

namespace {

QuadratureRule compute_gauss_legendre(std::size_t n) {
  QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 - (static_cast<double>(k) - 1.0) * p0) /
                          static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = x;
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 - (static_cast<double>(k) - 1.0) * p0) /
                        static_cast<double>(k);
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

std::shared_ptr<const QuadratureRule> gauss_legendre(std::size_t n) {
  require(n >= 1, ErrorCode::InvalidArgument, "quadrature needs at least one node");
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const QuadratureRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const QuadratureRule>(compute_gauss_legendre(n));
  return slot;
}

double softplus(double t) {
  if (t > 30.0) return t + std::exp(-t);
  return std::log1p(std::exp(std::max(t, -30.0)));
}

double softplus_derivative(double t) {
  if (t < -30.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-t));
}

}  // namespace biflow
