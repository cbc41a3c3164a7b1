#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace biflow {

/// Exponent tuples for a tensor-product polynomial basis over `dimension`
/// variables. Always contains the zero tuple.
class MultiIndexSet {
 public:
  MultiIndexSet() = default;
  MultiIndexSet(std::size_t dimension, std::size_t max_total_order,
                const std::vector<std::vector<std::uint32_t>>& indices);

  /// All tuples with total order <= max_total_order, graded, zero tuple first.
  static MultiIndexSet total_order(std::size_t dimension, std::size_t max_total_order);

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t max_total_order() const noexcept { return order_; }
  std::size_t size() const noexcept { return dim_ ? flat_.size() / dim_ : 0; }
  std::span<const std::uint32_t> operator[](std::size_t i) const {
    return {flat_.data() + i * dim_, dim_};
  }
  std::vector<std::vector<std::uint32_t>> to_vectors() const;

  friend bool operator==(const MultiIndexSet&, const MultiIndexSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::size_t order_ = 0;
  std::vector<std::uint32_t> flat_;
};

/// Probabilists' Hermite polynomials He_0..He_order at x, by recurrence.
void hermite_values(double x, std::size_t order, std::span<double> out);

/// Gauss-Legendre rule on [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached rule with n nodes; safe to call concurrently.
std::shared_ptr<const QuadratureRule> gauss_legendre(std::size_t n);

/// log(1 + e^t) with the exponent argument clamped to [-30, 30].
double softplus(double t);
/// Derivative of softplus consistent with the clamp.
double softplus_derivative(double t);

}  // namespace biflow
