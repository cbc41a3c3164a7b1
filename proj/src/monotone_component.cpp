#include "biflow/monotone_component.hpp"

#include <cmath>

#include "biflow/error.hpp"

namespace biflow {

namespace {

constexpr double kBracketLimit = 1e8;
constexpr int kBisectionSteps = 80;
constexpr int kNewtonSteps = 5;

double inverse_softplus(double d) { return d > 30.0 ? d : std::log(std::expm1(d)); }

}  // namespace

MonotoneComponent::MonotoneComponent(MultiIndexSet basis, Vector coeffs_nonmonotone,
                                     Vector coeffs_monotone, std::size_t quadrature_nodes)
    : basis_(std::move(basis)),
      nonmono_(std::move(coeffs_nonmonotone)),
      mono_(std::move(coeffs_monotone)),
      rule_(gauss_legendre(quadrature_nodes)) {
  require(basis_.dimension() >= 1, ErrorCode::BadModel, "component needs at least one input");
  const std::size_t k = basis_.dimension();
  for (std::size_t i = 0; i < basis_.size(); ++i)
    if (basis_[i][k - 1] == 0) nonmono_terms_.push_back(i);
  require(nonmono_.size() == nonmono_terms_.size(), ErrorCode::BadModel,
          "nonmonotone coefficient count does not match the basis");
  require(mono_.size() == basis_.size(), ErrorCode::BadModel,
          "monotone coefficient count does not match the basis");
}

MonotoneComponent MonotoneComponent::identity(std::size_t input_dim, std::size_t max_total_order,
                                              std::size_t quadrature_nodes) {
  const Vector none(input_dim - 1, 0.0);
  return affine(none, 1.0, 0.0, max_total_order, quadrature_nodes);
}

MonotoneComponent MonotoneComponent::affine(std::span<const double> off_diagonal, double diagonal,
                                            double shift, std::size_t max_total_order,
                                            std::size_t quadrature_nodes) {
  require(diagonal > 0.0, ErrorCode::InvalidArgument, "diagonal must be positive");
  const std::size_t k = off_diagonal.size() + 1;
  bool needs_linear = false;
  for (double c : off_diagonal) needs_linear = needs_linear || c != 0.0;
  require(!needs_linear || max_total_order >= 1, ErrorCode::InvalidArgument,
          "off-diagonal terms need a basis of order >= 1");
  auto basis = MultiIndexSet::total_order(k, max_total_order);
  Vector nonmono, mono(basis.size(), 0.0);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto idx = basis[i];
    std::uint32_t total = 0;
    for (auto e : idx) total += e;
    if (idx[k - 1] == 0) {
      double c = 0.0;
      if (total == 0) c = shift;
      if (total == 1)
        for (std::size_t j = 0; j + 1 < k; ++j)
          if (idx[j] == 1) c = off_diagonal[j];
      nonmono.push_back(c);
    }
    if (total == 0) mono[i] = inverse_softplus(diagonal);
  }
  return MonotoneComponent(std::move(basis), std::move(nonmono), std::move(mono), quadrature_nodes);
}

Vector MonotoneComponent::parameters() const {
  Vector p = nonmono_;
  p.insert(p.end(), mono_.begin(), mono_.end());
  return p;
}

void MonotoneComponent::set_parameters(std::span<const double> p) {
  require(p.size() == parameter_count(), ErrorCode::DimensionMismatch, "parameter vector has wrong length");
  std::copy(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(nonmono_.size()), nonmono_.begin());
  std::copy(p.begin() + static_cast<std::ptrdiff_t>(nonmono_.size()), p.end(), mono_.begin());
}

void MonotoneComponent::fill_prefix(std::span<const double> z, Workspace& ws) const {
  const std::size_t k = input_dim(), p1 = max_total_order() + 1, nb = basis_.size();
  ws.hermite.resize(k * p1);
  ws.prefix.resize(nb);
  for (std::size_t j = 0; j < k; ++j)
    hermite_values(z[j], p1 - 1, std::span<double>(ws.hermite).subspan(j * p1, p1));
  for (std::size_t i = 0; i < nb; ++i) {
    const auto idx = basis_[i];
    double prod = 1.0;
    for (std::size_t j = 0; j + 1 < k; ++j) prod *= ws.hermite[j * p1 + idx[j]];
    ws.prefix[i] = prod;
  }
}

MonotoneComponent::Section MonotoneComponent::section(std::span<const double> prefix) const {
  const std::size_t k = input_dim();
  require(prefix.size() + 1 == k, ErrorCode::DimensionMismatch, "section needs k - 1 leading inputs");
  thread_local Workspace ws;
  thread_local Vector z;
  z.assign(prefix.begin(), prefix.end());
  z.push_back(0.0);
  fill_prefix(z, ws);

  Section s;
  s.rule_ = rule_.get();
  s.a_.assign(max_total_order() + 1, 0.0);
  for (std::size_t j = 0; j < nonmono_terms_.size(); ++j)
    s.offset_ += nonmono_[j] * ws.prefix[nonmono_terms_[j]];
  for (std::size_t i = 0; i < basis_.size(); ++i) s.a_[basis_[i][k - 1]] += mono_[i] * ws.prefix[i];
  return s;
}

double MonotoneComponent::Section::h(double t, std::span<double> he) const {
  hermite_values(t, a_.size() - 1, he);
  double s = 0.0;
  for (std::size_t j = 0; j < a_.size(); ++j) s += a_[j] * he[j];
  return s;
}

double MonotoneComponent::Section::value(double t) const {
  if (t == 0.0) return offset_;
  thread_local Vector he;
  he.resize(a_.size());
  const double half = 0.5 * t;
  double integral = 0.0;
  for (std::size_t i = 0; i < rule_->nodes.size(); ++i)
    integral += rule_->weights[i] * softplus(h(half * (1.0 + rule_->nodes[i]), he));
  return offset_ + half * integral;
}

double MonotoneComponent::Section::slope(double t) const {
  thread_local Vector he;
  he.resize(a_.size());
  return softplus(h(t, he));
}

double MonotoneComponent::Section::solve(double target) const {
  require(std::isfinite(target), ErrorCode::BracketNotFound, "inversion target is not finite");
  double lo = -1.0, hi = 1.0;
  while (value(lo) > target) {
    require(lo > -kBracketLimit, ErrorCode::BracketNotFound, "no bracket for the inverse below -1e8");
    lo = std::max(2.0 * lo, -kBracketLimit);
  }
  while (value(hi) < target) {
    require(hi < kBracketLimit, ErrorCode::BracketNotFound, "no bracket for the inverse above 1e8");
    hi = std::min(2.0 * hi, kBracketLimit);
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(target));
  double t = 0.5 * (lo + hi);
  double r = value(t) - target;
  for (int it = 0; it < kBisectionSteps && std::abs(r) > tol; ++it) {
    (r > 0.0 ? hi : lo) = t;
    t = 0.5 * (lo + hi);
    r = value(t) - target;
  }
  for (int it = 0; it < kNewtonSteps && r != 0.0; ++it) {
    const double next = t - r / slope(t);
    if (!(next >= lo && next <= hi)) break;
    const double rn = value(next) - target;
    if (std::abs(rn) >= std::abs(r)) break;
    t = next;
    r = rn;
  }
  return t;
}

double MonotoneComponent::evaluate(std::span<const double> z) const {
  require(z.size() == input_dim(), ErrorCode::DimensionMismatch, "component input has wrong length");
  return section(z.first(z.size() - 1)).value(z.back());
}

double MonotoneComponent::diagonal_derivative(std::span<const double> z) const {
  require(z.size() == input_dim(), ErrorCode::DimensionMismatch, "component input has wrong length");
  return section(z.first(z.size() - 1)).slope(z.back());
}

double MonotoneComponent::kl_term(std::span<const double> z, std::span<double> grad,
                                  Workspace& ws) const {
  const std::size_t k = input_dim(), p1 = max_total_order() + 1, nb = basis_.size();
  fill_prefix(z, ws);
  ws.a.assign(p1, 0.0);
  double g = 0.0;
  for (std::size_t j = 0; j < nonmono_terms_.size(); ++j) g += nonmono_[j] * ws.prefix[nonmono_terms_[j]];
  for (std::size_t i = 0; i < nb; ++i) ws.a[basis_[i][k - 1]] += mono_[i] * ws.prefix[i];

  auto h_at = [&](double t) {
    hermite_values(t, p1 - 1, ws.he);
    double s = 0.0;
    for (std::size_t j = 0; j < p1; ++j) s += ws.a[j] * ws.he[j];
    return s;
  };

  const bool want_grad = !grad.empty();
  ws.he.resize(p1);
  ws.integral.assign(p1, 0.0);
  const double zk = z[k - 1], half = 0.5 * zk;
  double integral = 0.0;
  if (zk != 0.0) {
    for (std::size_t q = 0; q < rule_->nodes.size(); ++q) {
      const double w = half * rule_->weights[q];
      const double hv = h_at(half * (1.0 + rule_->nodes[q]));
      integral += w * softplus(hv);
      if (want_grad) {
        const double ds = w * softplus_derivative(hv);
        for (std::size_t j = 0; j < p1; ++j) ws.integral[j] += ds * ws.he[j];
      }
    }
  }
  const double c = g + integral;
  const double h_end = h_at(zk);  // leaves He_j(z_k) in ws.he
  const double diag = softplus(h_end);
  const double value = 0.5 * c * c - std::log(diag);
  if (!want_grad) return value;

  const double ratio = softplus_derivative(h_end) / diag;
  const std::size_t off = nonmono_.size();
  for (std::size_t j = 0; j < off; ++j) grad[j] += c * ws.prefix[nonmono_terms_[j]];
  for (std::size_t i = 0; i < nb; ++i) {
    const std::uint32_t e = basis_[i][k - 1];
    grad[off + i] += ws.prefix[i] * (c * ws.integral[e] - ratio * ws.he[e]);
  }
  return value;
}

}  // namespace biflow
