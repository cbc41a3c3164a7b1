#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "biflow/linalg.hpp"
#include "biflow/polynomial_basis.hpp"

namespace biflow {

/// One scalar component of a triangular map with k inputs:
///
///   c(z) = g(z_1..z_{k-1}) + int_0^{z_k} softplus(h(z_1..z_{k-1}, t)) dt
///
/// g and h are expansions in products of Hermite polynomials over one shared
/// multi-index set. g uses the multi-indices whose last exponent is zero.
class MonotoneComponent {
 public:
  static constexpr std::size_t kDefaultQuadratureNodes = 32;

  MonotoneComponent(MultiIndexSet basis, Vector coeffs_nonmonotone, Vector coeffs_monotone,
                    std::size_t quadrature_nodes = kDefaultQuadratureNodes);

  /// c(z) = z_k on a total-order basis.
  static MonotoneComponent identity(std::size_t input_dim, std::size_t max_total_order,
                                    std::size_t quadrature_nodes = kDefaultQuadratureNodes);
  /// c(z) = shift + sum_j off_diagonal_j z_j + diagonal z_k. Needs order >= 1
  /// unless input_dim is 1.
  static MonotoneComponent affine(std::span<const double> off_diagonal, double diagonal, double shift,
                                  std::size_t max_total_order = 1,
                                  std::size_t quadrature_nodes = kDefaultQuadratureNodes);

  std::size_t input_dim() const noexcept { return basis_.dimension(); }
  std::size_t max_total_order() const noexcept { return basis_.max_total_order(); }
  std::size_t quadrature_nodes() const noexcept { return rule_->nodes.size(); }
  const MultiIndexSet& basis() const noexcept { return basis_; }
  const Vector& coeffs_nonmonotone() const noexcept { return nonmono_; }
  const Vector& coeffs_monotone() const noexcept { return mono_; }

  /// Nonmonotone coefficients followed by monotone ones.
  std::size_t parameter_count() const noexcept { return nonmono_.size() + mono_.size(); }
  Vector parameters() const;
  void set_parameters(std::span<const double> p);

  double evaluate(std::span<const double> z) const;
  /// d c / d z_k = softplus(h(z)).
  double diagonal_derivative(std::span<const double> z) const;

  /// The component as a function of z_k alone, z_1..z_{k-1} held fixed.
  class Section {
   public:
    double value(double t) const;
    double slope(double t) const;
    /// Root of value(t) = target: doubling bracket from [-1, 1] up to 1e8,
    /// bisection, then Newton polish. Throws BracketNotFound.
    double solve(double target) const;

   private:
    friend class MonotoneComponent;
    double h(double t, std::span<double> he) const;
    double offset_ = 0.0;
    Vector a_;  // coefficient of He_j(t) in h
    const QuadratureRule* rule_ = nullptr;
  };

  Section section(std::span<const double> prefix) const;

  /// Scratch buffers for kl_term; one per thread.
  struct Workspace {
    Vector hermite;  // input_dim x (order + 1)
    Vector prefix;   // product over leading variables, per multi-index
    Vector a, integral, he;
  };

  /// 0.5 c(z)^2 - log softplus(h(z)). When grad is non-empty its gradient
  /// with respect to parameters() is added to grad.
  double kl_term(std::span<const double> z, std::span<double> grad, Workspace& ws) const;

 private:
  void fill_prefix(std::span<const double> z, Workspace& ws) const;

  MultiIndexSet basis_;
  Vector nonmono_;
  Vector mono_;
  std::vector<std::size_t> nonmono_terms_;  // basis positions with last exponent 0
  std::shared_ptr<const QuadratureRule> rule_;
};

}  // namespace biflow
