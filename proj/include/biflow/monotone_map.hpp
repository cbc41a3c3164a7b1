#pragma once

#include <vector>

#include "biflow/monotone_component.hpp"
#include "biflow/triangular_map.hpp"

namespace biflow {

/// Which direction the components parametrize. With Inverse the components
/// evaluate T^-1 directly (the training setup) and T needs root finding.
enum class Parametrization { Forward, Inverse };

/// Componentwise Knothe-Rosenblatt map.
///
/// Components live in internal coordinates: natural order for lower maps and
/// reversed order for upper maps, so component i always sees internal inputs
/// 0..i. Data-side values are standardized per natural coordinate,
/// (w_j - shift_j) / scale_j, before the components see them.
class MonotoneTriangularMap final : public TriangularMap {
 public:
  MonotoneTriangularMap(BlockSplit split, Orientation orientation, Parametrization parametrization,
                        std::vector<MonotoneComponent> components);

  static MonotoneTriangularMap identity(BlockSplit split, Orientation orientation,
                                        Parametrization parametrization, std::size_t max_total_order,
                                        std::size_t quadrature_nodes = MonotoneComponent::kDefaultQuadratureNodes);

  Parametrization parametrization() const noexcept { return param_; }
  const std::vector<MonotoneComponent>& components() const noexcept { return components_; }
  MonotoneComponent& component(std::size_t i) { return components_.at(i); }

  const Vector& data_shift() const noexcept { return shift_; }
  const Vector& data_scale() const noexcept { return scale_; }
  void set_standardization(Vector shift, Vector scale);

  /// Standardized data point in internal order: the input of the components
  /// under the inverse parametrization.
  Vector standardized_internal(std::span<const double> w) const;

  Vector forward(std::span<const double> z) const override;
  Vector inverse(std::span<const double> w) const override;
  double log_det_forward(std::span<const double> z) const override;
  double log_det_inverse(std::span<const double> w) const override;
  Vector independent_forward(std::span<const double> latent) const override;
  Vector independent_inverse(std::span<const double> value) const override;
  Vector dependent_forward(std::span<const double> latent_ind, std::span<const double> value_ind,
                           std::span<const double> latent_dep) const override;
  Vector dependent_inverse(std::span<const double> latent_ind, std::span<const double> value_ind,
                           std::span<const double> value_dep) const override;

 private:
  // Internal <-> natural for a block starting at natural offset `offset`.
  Vector to_internal(std::span<const double> v) const;
  Vector standardize(std::span<const double> v, std::size_t offset) const;
  Vector unstandardize(std::span<const double> v, std::size_t offset) const;
  // x[begin, end) = components applied to x (x holds the prefix).
  void eval_range(Vector& x, std::size_t begin, std::size_t end, Vector& out) const;
  // Solves components begin..end-1 for the targets, filling x[begin, end).
  void solve_range(Vector& x, std::size_t begin, std::span<const double> targets) const;
  double sum_log_diag(std::span<const double> x) const;
  double sum_log_scale() const;

  Parametrization param_;
  std::vector<MonotoneComponent> components_;
  Vector shift_;
  Vector scale_;
};

}  // namespace biflow
