#include "biflow/triangular_map.hpp"

#include <cmath>

#include "biflow/error.hpp"

namespace biflow {

namespace {

Vector subtract(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

void check_size(std::span<const double> v, std::size_t n, const char* what) {
  require(v.size() == n, ErrorCode::DimensionMismatch, what);
}

}  // namespace

AffineTriangularMap::AffineTriangularMap(Matrix a, Vector shift, Orientation orientation, BlockSplit split)
    : TriangularMap(split, orientation), a_(std::move(a)), b_(std::move(shift)) {
  const std::size_t d = split.total();
  require(a_.rows() == d && a_.cols() == d && b_.size() == d, ErrorCode::DimensionMismatch,
          "affine map does not match the block split");
  require(a_.all_finite(), ErrorCode::BadModel, "affine map has non-finite entries");
  tri_ = orientation == Orientation::Lower ? Triangle::Lower : Triangle::Upper;
  const double tol = 1e-12 * std::max(a_.max_abs(), 1e-300);
  for (std::size_t i = 0; i < d; ++i) {
    require(a_(i, i) > 0.0, ErrorCode::SingularDiagonal, "affine map diagonal must be positive");
    log_det_ += std::log(a_(i, i));
    for (std::size_t j = 0; j < d; ++j) {
      const bool outside = tri_ == Triangle::Lower ? j > i : j < i;
      if (!outside) continue;
      require(std::abs(a_(i, j)) <= tol, ErrorCode::BadModel, "affine map is not triangular");
      a_(i, j) = 0.0;
    }
  }
  const std::size_t io = independent_offset(), is = independent_size();
  const std::size_t dof = dependent_offset(), ds = dependent_size();
  ind_ind_ = a_.block(io, io, is, is);
  dep_ind_ = a_.block(dof, io, ds, is);
  dep_dep_ = a_.block(dof, dof, ds, ds);
  b_ind_.assign(b_.begin() + static_cast<std::ptrdiff_t>(io), b_.begin() + static_cast<std::ptrdiff_t>(io + is));
  b_dep_.assign(b_.begin() + static_cast<std::ptrdiff_t>(dof), b_.begin() + static_cast<std::ptrdiff_t>(dof + ds));
}

Vector AffineTriangularMap::forward(std::span<const double> z) const {
  check_size(z, dimension(), "affine forward: wrong input length");
  Vector w = a_ * z;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += b_[i];
  return w;
}

Vector AffineTriangularMap::inverse(std::span<const double> w) const {
  check_size(w, dimension(), "affine inverse: wrong input length");
  return solve_triangular(a_, subtract(w, b_), tri_);
}

Vector AffineTriangularMap::independent_forward(std::span<const double> latent) const {
  check_size(latent, independent_size(), "affine: wrong independent block length");
  Vector w = ind_ind_ * latent;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += b_ind_[i];
  return w;
}

Vector AffineTriangularMap::independent_inverse(std::span<const double> value) const {
  check_size(value, independent_size(), "affine: wrong independent block length");
  return solve_triangular(ind_ind_, subtract(value, b_ind_), tri_);
}

Vector AffineTriangularMap::dependent_forward(std::span<const double> latent_ind, std::span<const double>,
                                              std::span<const double> latent_dep) const {
  check_size(latent_ind, independent_size(), "affine: wrong independent block length");
  check_size(latent_dep, dependent_size(), "affine: wrong dependent block length");
  Vector w = dep_dep_ * latent_dep;
  const Vector c = dep_ind_ * latent_ind;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += c[i] + b_dep_[i];
  return w;
}

Vector AffineTriangularMap::dependent_inverse(std::span<const double> latent_ind, std::span<const double>,
                                              std::span<const double> value_dep) const {
  check_size(latent_ind, independent_size(), "affine: wrong independent block length");
  check_size(value_dep, dependent_size(), "affine: wrong dependent block length");
  Vector r = subtract(value_dep, b_dep_);
  const Vector c = dep_ind_ * latent_ind;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= c[i];
  return solve_triangular(dep_dep_, r, tri_);
}

double sign_nonneg(double x) { return x >= 0.0 ? 1.0 : -1.0; }

SignTargetMap::SignTargetMap(double a, double b) : TriangularMap({1, 1}, Orientation::Lower), a_(a), b_(b) {
  require(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b), ErrorCode::InvalidArgument,
          "target map needs a > 0 and b > 0");
}

Vector SignTargetMap::forward(std::span<const double> z) const {
  check_size(z, 2, "target map: wrong input length");
  const double u = a_ * z[0];
  return {u, sign_nonneg(u) + b_ * z[1]};
}

Vector SignTargetMap::inverse(std::span<const double> w) const {
  check_size(w, 2, "target map: wrong input length");
  return {w[0] / a_, (w[1] - sign_nonneg(w[0])) / b_};
}

double SignTargetMap::log_det_forward(std::span<const double>) const { return std::log(a_ * b_); }
double SignTargetMap::log_det_inverse(std::span<const double>) const { return -std::log(a_ * b_); }

Vector SignTargetMap::independent_forward(std::span<const double> latent) const {
  check_size(latent, 1, "target map: wrong block length");
  return {a_ * latent[0]};
}

Vector SignTargetMap::independent_inverse(std::span<const double> value) const {
  check_size(value, 1, "target map: wrong block length");
  return {value[0] / a_};
}

Vector SignTargetMap::dependent_forward(std::span<const double>, std::span<const double> value_ind,
                                        std::span<const double> latent_dep) const {
  check_size(value_ind, 1, "target map: wrong block length");
  check_size(latent_dep, 1, "target map: wrong block length");
  return {sign_nonneg(value_ind[0]) + b_ * latent_dep[0]};
}

Vector SignTargetMap::dependent_inverse(std::span<const double>, std::span<const double> value_ind,
                                        std::span<const double> value_dep) const {
  check_size(value_ind, 1, "target map: wrong block length");
  check_size(value_dep, 1, "target map: wrong block length");
  return {(value_dep[0] - sign_nonneg(value_ind[0])) / b_};
}

ConditionalMap::ConditionalMap(const TriangularMap& map, std::span<const double> condition)
    : map_(&map), value_(condition.begin(), condition.end()), latent_(map.independent_inverse(condition)) {}

Vector ConditionalMap::forward(std::span<const double> z) const {
  return map_->dependent_forward(latent_, value_, z);
}

Vector ConditionalMap::inverse(std::span<const double> w) const {
  return map_->dependent_inverse(latent_, value_, w);
}

ConditionalMap conditional_like(const TriangularMap& f_check, std::span<const double> u) {
  require(f_check.orientation() == Orientation::Lower, ErrorCode::InvalidArgument,
          "likelihood map must be lower triangular");
  require(u.size() == f_check.split().n, ErrorCode::DimensionMismatch, "conditioning u has wrong length");
  return ConditionalMap(f_check, u);
}

ConditionalMap conditional_post(const TriangularMap& f_hat, std::span<const double> f) {
  require(f_hat.orientation() == Orientation::Upper, ErrorCode::InvalidArgument,
          "posterior map must be upper triangular");
  require(f.size() == f_hat.split().m, ErrorCode::DimensionMismatch, "conditioning f has wrong length");
  return ConditionalMap(f_hat, f);
}

}  // namespace biflow
