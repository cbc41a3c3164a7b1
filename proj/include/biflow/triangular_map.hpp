#pragma once

#include <cstddef>
#include <span>

#include "biflow/linalg.hpp"
#include "biflow/sample_batch.hpp"

namespace biflow {

/// Lower maps order the blocks (u, f); upper maps order them (f, u), i.e. the
/// first output block depends on both inputs.
enum class Orientation { Lower, Upper };
enum class Direction { Forward, Inverse };

/// Invertible map T on R^(n+m) with a block-triangular Jacobian.
///
/// The independent block is the one whose output depends on itself only:
/// coordinates [0, n) for lower maps and [n, n+m) for upper maps. The block
/// primitives evaluate the map one block at a time, which is what the
/// conditional maps need. All arguments and results are in natural
/// coordinate order.
class TriangularMap {
 public:
  virtual ~TriangularMap() = default;

  std::size_t dimension() const noexcept { return split_.total(); }
  Orientation orientation() const noexcept { return orientation_; }
  BlockSplit split() const noexcept { return split_; }

  std::size_t independent_offset() const noexcept { return orientation_ == Orientation::Lower ? 0 : split_.n; }
  std::size_t independent_size() const noexcept { return orientation_ == Orientation::Lower ? split_.n : split_.m; }
  std::size_t dependent_offset() const noexcept { return orientation_ == Orientation::Lower ? split_.n : 0; }
  std::size_t dependent_size() const noexcept { return orientation_ == Orientation::Lower ? split_.m : split_.n; }

  virtual Vector forward(std::span<const double> z) const = 0;
  virtual Vector inverse(std::span<const double> w) const = 0;

  /// log |det grad T(z)|.
  virtual double log_det_forward(std::span<const double> z) const = 0;
  /// log |det grad T^-1(w)|.
  virtual double log_det_inverse(std::span<const double> w) const = 0;
  double log_det_jacobian(std::span<const double> point, Direction direction) const {
    return direction == Direction::Forward ? log_det_forward(point) : log_det_inverse(point);
  }

  virtual Vector independent_forward(std::span<const double> latent) const = 0;
  virtual Vector independent_inverse(std::span<const double> value) const = 0;
  /// Dependent output block for the given latent and value of the
  /// independent block and the latent dependent block.
  virtual Vector dependent_forward(std::span<const double> latent_ind, std::span<const double> value_ind,
                                   std::span<const double> latent_dep) const = 0;
  virtual Vector dependent_inverse(std::span<const double> latent_ind, std::span<const double> value_ind,
                                   std::span<const double> value_dep) const = 0;

 protected:
  TriangularMap(BlockSplit split, Orientation orientation) : split_(split), orientation_(orientation) {}

 private:
  BlockSplit split_;
  Orientation orientation_;
};

/// T(z) = A z + b with A triangular in the map's orientation and a positive
/// diagonal.
class AffineTriangularMap final : public TriangularMap {
 public:
  AffineTriangularMap(Matrix a, Vector shift, Orientation orientation, BlockSplit split);

  const Matrix& matrix() const noexcept { return a_; }
  const Vector& shift() const noexcept { return b_; }

  Vector forward(std::span<const double> z) const override;
  Vector inverse(std::span<const double> w) const override;
  double log_det_forward(std::span<const double>) const override { return log_det_; }
  double log_det_inverse(std::span<const double>) const override { return -log_det_; }
  Vector independent_forward(std::span<const double> latent) const override;
  Vector independent_inverse(std::span<const double> value) const override;
  Vector dependent_forward(std::span<const double> latent_ind, std::span<const double> value_ind,
                           std::span<const double> latent_dep) const override;
  Vector dependent_inverse(std::span<const double> latent_ind, std::span<const double> value_ind,
                           std::span<const double> value_dep) const override;

 private:
  Matrix a_;
  Vector b_;
  Matrix ind_ind_, dep_ind_, dep_dep_;
  Vector b_ind_, b_dep_;
  Triangle tri_;
  double log_det_ = 0.0;
};

/// (x, y) -> (a x, sign(a x) + b y) on R^2 with sign(0) = +1; inverse
/// (u, f) -> (u / a, (f - sign(u)) / b).
class SignTargetMap final : public TriangularMap {
 public:
  SignTargetMap(double a, double b);

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }

  Vector forward(std::span<const double> z) const override;
  Vector inverse(std::span<const double> w) const override;
  double log_det_forward(std::span<const double>) const override;
  double log_det_inverse(std::span<const double>) const override;
  Vector independent_forward(std::span<const double> latent) const override;
  Vector independent_inverse(std::span<const double> value) const override;
  Vector dependent_forward(std::span<const double> latent_ind, std::span<const double> value_ind,
                           std::span<const double> latent_dep) const override;
  Vector dependent_inverse(std::span<const double> latent_ind, std::span<const double> value_ind,
                           std::span<const double> value_dep) const override;

 private:
  double a_, b_;
};

double sign_nonneg(double x);

/// The dependent block of a triangular map with the independent block fixed
/// to a conditioning value. Holds a reference to the map, which must outlive
/// it.
class ConditionalMap {
 public:
  ConditionalMap(const TriangularMap& map, std::span<const double> condition);

  std::size_t dimension() const noexcept { return map_->dependent_size(); }
  const Vector& condition() const noexcept { return value_; }
  const Vector& condition_latent() const noexcept { return latent_; }

  Vector forward(std::span<const double> z) const;
  Vector inverse(std::span<const double> w) const;

 private:
  const TriangularMap* map_;
  Vector value_;
  Vector latent_;
};

/// y -> F_check_2(F_check_1^-1(u), y). Requires a lower map.
ConditionalMap conditional_like(const TriangularMap& f_check, std::span<const double> u);
/// x -> F_hat_1(x, F_hat_2^-1(f)). Requires an upper map.
ConditionalMap conditional_post(const TriangularMap& f_hat, std::span<const double> f);

}  // namespace biflow
