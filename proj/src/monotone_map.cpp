#include "biflow/monotone_map.hpp"

#include <algorithm>
#include <cmath>

#include "biflow/error.hpp"

namespace biflow {

MonotoneTriangularMap::MonotoneTriangularMap(BlockSplit split, Orientation orientation,
                                             Parametrization parametrization,
                                             std::vector<MonotoneComponent> components)
    : TriangularMap(split, orientation),
      param_(parametrization),
      components_(std::move(components)),
      shift_(split.total(), 0.0),
      scale_(split.total(), 1.0) {
  require(split.total() >= 1, ErrorCode::BadModel, "map dimension must be positive");
  require(components_.size() == split.total(), ErrorCode::BadModel, "map needs one component per dimension");
  for (std::size_t i = 0; i < components_.size(); ++i)
    require(components_[i].input_dim() == i + 1, ErrorCode::BadModel, "component k must take k inputs");
}

MonotoneTriangularMap MonotoneTriangularMap::identity(BlockSplit split, Orientation orientation,
                                                      Parametrization parametrization,
                                                      std::size_t max_total_order,
                                                      std::size_t quadrature_nodes) {
  std::vector<MonotoneComponent> comps;
  for (std::size_t i = 0; i < split.total(); ++i)
    comps.push_back(MonotoneComponent::identity(i + 1, max_total_order, quadrature_nodes));
  return MonotoneTriangularMap(split, orientation, parametrization, std::move(comps));
}

void MonotoneTriangularMap::set_standardization(Vector shift, Vector scale) {
  require(shift.size() == dimension() && scale.size() == dimension(), ErrorCode::DimensionMismatch,
          "standardization does not match the map dimension");
  for (std::size_t i = 0; i < dimension(); ++i)
    require(scale[i] > 0.0 && std::isfinite(scale[i]) && std::isfinite(shift[i]), ErrorCode::BadModel,
            "standardization scale must be positive and finite");
  shift_ = std::move(shift);
  scale_ = std::move(scale);
}

Vector MonotoneTriangularMap::to_internal(std::span<const double> v) const {
  Vector out(v.begin(), v.end());
  if (orientation() == Orientation::Upper) std::reverse(out.begin(), out.end());
  return out;
}

Vector MonotoneTriangularMap::standardize(std::span<const double> v, std::size_t offset) const {
  Vector out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = (v[j] - shift_[offset + j]) / scale_[offset + j];
  return out;
}

Vector MonotoneTriangularMap::unstandardize(std::span<const double> v, std::size_t offset) const {
  Vector out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j] * scale_[offset + j] + shift_[offset + j];
  return out;
}

Vector MonotoneTriangularMap::standardized_internal(std::span<const double> w) const {
  require(w.size() == dimension(), ErrorCode::DimensionMismatch, "point has wrong length");
  return to_internal(standardize(w, 0));
}

void MonotoneTriangularMap::eval_range(Vector& x, std::size_t begin, std::size_t end, Vector& out) const {
  out.resize(end - begin);
  for (std::size_t i = begin; i < end; ++i)
    out[i - begin] = components_[i].evaluate(std::span<const double>(x.data(), i + 1));
}

void MonotoneTriangularMap::solve_range(Vector& x, std::size_t begin, std::span<const double> targets) const {
  x.resize(begin + targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::size_t c = begin + i;
    x[c] = components_[c].section(std::span<const double>(x.data(), c)).solve(targets[i]);
  }
}

double MonotoneTriangularMap::sum_log_diag(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i)
    s += std::log(components_[i].diagonal_derivative(x.first(i + 1)));
  return s;
}

double MonotoneTriangularMap::sum_log_scale() const {
  double s = 0.0;
  for (double v : scale_) s += std::log(v);
  return s;
}

Vector MonotoneTriangularMap::forward(std::span<const double> z) const {
  require(z.size() == dimension(), ErrorCode::DimensionMismatch, "point has wrong length");
  Vector x = to_internal(z), y;
  if (param_ == Parametrization::Forward) {
    eval_range(x, 0, dimension(), y);
  } else {
    solve_range(y, 0, x);
  }
  return unstandardize(to_internal(y), 0);
}

Vector MonotoneTriangularMap::inverse(std::span<const double> w) const {
  Vector x = standardized_internal(w), y;
  if (param_ == Parametrization::Forward) {
    solve_range(y, 0, x);
  } else {
    eval_range(x, 0, dimension(), y);
  }
  return to_internal(y);
}

double MonotoneTriangularMap::log_det_forward(std::span<const double> z) const {
  require(z.size() == dimension(), ErrorCode::DimensionMismatch, "point has wrong length");
  if (param_ == Parametrization::Forward) return sum_log_diag(to_internal(z)) + sum_log_scale();
  return -sum_log_diag(standardized_internal(forward(z))) + sum_log_scale();
}

double MonotoneTriangularMap::log_det_inverse(std::span<const double> w) const {
  if (param_ == Parametrization::Inverse) return sum_log_diag(standardized_internal(w)) - sum_log_scale();
  return -sum_log_diag(to_internal(inverse(w))) - sum_log_scale();
}

Vector MonotoneTriangularMap::independent_forward(std::span<const double> latent) const {
  require(latent.size() == independent_size(), ErrorCode::DimensionMismatch, "block has wrong length");
  Vector x = to_internal(latent), y;
  if (param_ == Parametrization::Forward) {
    eval_range(x, 0, x.size(), y);
  } else {
    solve_range(y, 0, x);
  }
  return unstandardize(to_internal(y), independent_offset());
}

Vector MonotoneTriangularMap::independent_inverse(std::span<const double> value) const {
  require(value.size() == independent_size(), ErrorCode::DimensionMismatch, "block has wrong length");
  Vector x = to_internal(standardize(value, independent_offset())), y;
  if (param_ == Parametrization::Forward) {
    solve_range(y, 0, x);
  } else {
    eval_range(x, 0, x.size(), y);
  }
  return to_internal(y);
}

Vector MonotoneTriangularMap::dependent_forward(std::span<const double> latent_ind,
                                                std::span<const double> value_ind,
                                                std::span<const double> latent_dep) const {
  const std::size_t p = independent_size();
  require(latent_ind.size() == p && value_ind.size() == p && latent_dep.size() == dependent_size(),
          ErrorCode::DimensionMismatch, "block has wrong length");
  Vector out;
  if (param_ == Parametrization::Forward) {
    Vector x = to_internal(latent_ind);
    const Vector dep = to_internal(latent_dep);
    x.insert(x.end(), dep.begin(), dep.end());
    eval_range(x, p, dimension(), out);
  } else {
    Vector x = to_internal(standardize(value_ind, independent_offset()));
    solve_range(x, p, to_internal(latent_dep));
    out.assign(x.begin() + static_cast<std::ptrdiff_t>(p), x.end());
  }
  return unstandardize(to_internal(out), dependent_offset());
}

Vector MonotoneTriangularMap::dependent_inverse(std::span<const double> latent_ind,
                                                std::span<const double> value_ind,
                                                std::span<const double> value_dep) const {
  const std::size_t p = independent_size();
  require(latent_ind.size() == p && value_ind.size() == p && value_dep.size() == dependent_size(),
          ErrorCode::DimensionMismatch, "block has wrong length");
  const Vector dep = to_internal(standardize(value_dep, dependent_offset()));
  Vector out;
  if (param_ == Parametrization::Forward) {
    Vector x = to_internal(latent_ind);
    solve_range(x, p, dep);
    out.assign(x.begin() + static_cast<std::ptrdiff_t>(p), x.end());
  } else {
    Vector x = to_internal(standardize(value_ind, independent_offset()));
    x.insert(x.end(), dep.begin(), dep.end());
    eval_range(x, p, dimension(), out);
  }
  return to_internal(out);
}

}  // namespace biflow
