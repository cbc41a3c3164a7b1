#include "biflow/bidirectional.hpp"

#include <cmath>

#include "biflow/error.hpp"
#include "biflow/parallel.hpp"
#include "biflow/random.hpp"
#include "biflow/stats.hpp"

namespace biflow {

namespace {

Vector concat(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void check_blocks(BlockSplit s, std::span<const double> a, std::size_t na, std::span<const double> b, std::size_t nb) {
  require(a.size() == na && b.size() == nb && na + nb == s.total(), ErrorCode::DimensionMismatch,
          "block lengths do not match the map");
}

void check_factors(const TriangularMap& f_check, const TriangularMap& f_hat) {
  require(f_check.orientation() == Orientation::Lower, ErrorCode::InvalidArgument, "F_check must be lower triangular");
  require(f_hat.orientation() == Orientation::Upper, ErrorCode::InvalidArgument, "F_hat must be upper triangular");
  require(f_check.split() == f_hat.split(), ErrorCode::DimensionMismatch, "factor maps declare different block splits");
}

// Maps each sample through fn in parallel; output order follows input order.
SampleBatch map_batch(const SampleBatch& in, std::size_t out_dim, std::optional<BlockSplit> split,
                      const std::function<Vector(std::span<const double>)>& fn) {
  std::vector<double> out(in.count() * out_dim);
  parallel_for(in.count(), [&](std::size_t i) {
    const Vector v = fn(in.sample(i));
    std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(i * out_dim));
  });
  return SampleBatch(out_dim, in.count(), std::move(out), split);
}

}  // namespace

BidirectionalMap::BidirectionalMap(std::shared_ptr<const TriangularMap> f_check,
                                   std::shared_ptr<const TriangularMap> f_hat)
    : f_check_(std::move(f_check)), f_hat_(std::move(f_hat)) {
  require(f_check_ && f_hat_, ErrorCode::InvalidArgument, "factor maps must be set");
  check_factors(*f_check_, *f_hat_);
}

Vector BidirectionalMap::apply_s(std::span<const double> u, std::span<const double> y) const {
  check_blocks(split(), u, n(), y, m());
  const Vector f = conditional_like(*f_check_, u).forward(y);
  const Vector x = conditional_post(*f_hat_, f).inverse(u);
  return concat(x, f);
}

Vector BidirectionalMap::apply_r(std::span<const double> x, std::span<const double> f) const {
  check_blocks(split(), x, n(), f, m());
  const Vector u = conditional_post(*f_hat_, f).forward(x);
  const Vector y = conditional_like(*f_check_, u).inverse(f);
  return concat(u, y);
}

BidirectionalMap gaussian_bidirectional(const GaussianMaps& maps, std::span<const double> mean) {
  const std::size_t d = maps.split.total();
  require(mean.empty() || mean.size() == d, ErrorCode::DimensionMismatch, "mean does not match the model");
  const Vector shift = mean.empty() ? Vector(d, 0.0) : Vector(mean.begin(), mean.end());
  return BidirectionalMap(std::make_shared<AffineTriangularMap>(maps.f_check, shift, Orientation::Lower, maps.split),
                          std::make_shared<AffineTriangularMap>(maps.f_hat, shift, Orientation::Upper, maps.split));
}

CounterexampleMap::CounterexampleMap(std::shared_ptr<const TriangularMap> f_check,
                                     std::shared_ptr<const TriangularMap> f_hat)
    : f_check_(std::move(f_check)), f_hat_(std::move(f_hat)) {
  require(f_check_ && f_hat_, ErrorCode::InvalidArgument, "factor maps must be set");
  check_factors(*f_check_, *f_hat_);
}

Vector CounterexampleMap::apply_s(std::span<const double> u, std::span<const double> y) const {
  check_blocks(split(), u, split().n, y, split().m);
  return concat(f_check_->independent_inverse(u), f_hat_->independent_forward(y));
}

Vector CounterexampleMap::apply_r(std::span<const double> x, std::span<const double> f) const {
  check_blocks(split(), x, split().n, f, split().m);
  return concat(f_check_->independent_forward(x), f_hat_->independent_inverse(f));
}

FactoredAffineMap::FactoredAffineMap(const GaussianLinearProblem& problem) : k_(problem.k) {
  const GaussianMaps maps = build_maps(problem);
  const std::size_t n = problem.n();
  lf_ = cholesky_lower(problem.sigma_f);
  p_ = maps.f_hat.block(0, 0, n, n);
  // S_post K^T S_F^-1 = (L_F^-1 K S_post)^T L_F^-1.
  const Matrix lf_inv = inverse_triangular(lf_, Triangle::Lower);
  gain_ = (lf_inv * k_ * maps.sigma_post).transpose() * lf_inv;
}

Vector FactoredAffineMap::apply_s(std::span<const double> u, std::span<const double> y) const {
  check_blocks(split(), u, k_.cols(), y, k_.rows());
  Vector f = k_ * u;
  const Vector noise = lf_ * y;
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += noise[i];
  Vector r(u.begin(), u.end());
  const Vector g = gain_ * std::span<const double>(f);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= g[i];
  return concat(solve_triangular(p_, r, Triangle::Upper), f);
}

Vector FactoredAffineMap::apply_r(std::span<const double> x, std::span<const double> f) const {
  check_blocks(split(), x, k_.cols(), f, k_.rows());
  Vector u = p_ * x;
  const Vector g = gain_ * f;
  for (std::size_t i = 0; i < u.size(); ++i) u[i] += g[i];
  Vector r(f.begin(), f.end());
  const Vector ku = k_ * std::span<const double>(u);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= ku[i];
  return concat(u, solve_triangular(lf_, r, Triangle::Lower));
}

SampleBatch simulate(const BidirectionalMap& b, std::span<const double> u, std::size_t n_samples, std::uint64_t seed) {
  require(n_samples >= 1, ErrorCode::InvalidArgument, "n_samples must be at least 1");
  const ConditionalMap like = conditional_like(b.f_check(), u);
  Rng rng(seed);
  const SampleBatch y = standard_normal(rng, n_samples, b.m());
  return map_batch(y, b.m(), std::nullopt, [&](std::span<const double> v) { return like.forward(v); });
}

SampleBatch infer(const BidirectionalMap& b, std::span<const double> f, std::size_t n_samples, std::uint64_t seed) {
  require(n_samples >= 1, ErrorCode::InvalidArgument, "n_samples must be at least 1");
  const ConditionalMap post = conditional_post(b.f_hat(), f);
  Rng rng(seed);
  const SampleBatch x = standard_normal(rng, n_samples, b.n());
  return map_batch(x, b.n(), std::nullopt, [&](std::span<const double> v) { return post.forward(v); });
}

SampleBatch apply_s(const JointMap& s, const SampleBatch& uy) {
  const BlockSplit sp = s.split();
  require(uy.dimension() == sp.total(), ErrorCode::DimensionMismatch, "batch does not match the map");
  return map_batch(uy, sp.total(), sp, [&](std::span<const double> v) {
    return s.apply_s(v.first(sp.n), v.subspan(sp.n));
  });
}

SampleBatch apply_r(const JointMap& s, const SampleBatch& xf) {
  const BlockSplit sp = s.split();
  require(xf.dimension() == sp.total(), ErrorCode::DimensionMismatch, "batch does not match the map");
  return map_batch(xf, sp.total(), sp, [&](std::span<const double> v) {
    return s.apply_r(v.first(sp.n), v.subspan(sp.n));
  });
}

LatentCheck latent_marginal_check(const JointMap& s, const SampleBatch& data, std::size_t n_latent,
                                  std::uint64_t seed, std::size_t permutations) {
  const BlockSplit sp = s.split();
  require(n_latent >= 2, ErrorCode::InsufficientSamples, "latent check needs n_latent >= 2");
  require(data.count() >= n_latent, ErrorCode::InsufficientSamples, "fewer data samples than n_latent");
  require(data.dimension() == sp.total(), ErrorCode::DimensionMismatch, "data does not match the map");
  const SampleBatch head = data.rows(0, n_latent);
  const Rng root(seed);
  Rng r0 = root.split(1), r1 = root.split(2), r2 = root.split(3), r3 = root.split(4);
  const SampleBatch x = standard_normal(r0, n_latent, sp.n);
  const SampleBatch y = standard_normal(r1, n_latent, sp.m);

  const SampleBatch xf = SampleBatch::hstack(x, head.columns(sp.n, sp.m), sp);
  const SampleBatch uy = SampleBatch::hstack(head.columns(0, sp.n), y, sp);
  const SampleBatch r2_latent = apply_r(s, xf).columns(sp.n, sp.m);
  const SampleBatch s1_latent = apply_s(s, uy).columns(0, sp.n);

  LatentCheck out;
  out.r2 = mmd(r2_latent, standard_normal(r2, n_latent, sp.m), {std::nullopt, permutations, seed});
  out.s1 = mmd(s1_latent, standard_normal(r3, n_latent, sp.n), {std::nullopt, permutations, seed + 1});
  return out;
}

std::array<MmdEstimate, 4> j_losses(const JointMap& s, const SampleBatch& data, std::size_t n_latent,
                                    std::uint64_t seed, std::size_t permutations) {
  const BlockSplit sp = s.split();
  require(n_latent >= 2, ErrorCode::InsufficientSamples, "J losses need n_latent >= 2");
  require(data.count() >= 2 * n_latent, ErrorCode::InsufficientSamples, "J losses need 2 n_latent data samples");
  require(data.dimension() == sp.total(), ErrorCode::DimensionMismatch, "data does not match the map");
  const SampleBatch drive = data.rows(0, n_latent);
  const SampleBatch ref = data.rows(n_latent, n_latent);
  const SampleBatch u = drive.columns(0, sp.n), f = drive.columns(sp.n, sp.m);

  const Rng root(seed);
  Rng ry = root.split(1), rx = root.split(2), rx_ref = root.split(3), ry_ref = root.split(4);
  const SampleBatch y = standard_normal(ry, n_latent, sp.m);
  const SampleBatch x = standard_normal(rx, n_latent, sp.n);

  const SampleBatch s_out = apply_s(s, SampleBatch::hstack(u, y, sp));
  const SampleBatch r_out = apply_r(s, SampleBatch::hstack(x, f, sp));

  const SampleBatch j1 = SampleBatch::hstack(u, s_out.columns(sp.n, sp.m), sp);
  const SampleBatch j2 = SampleBatch::hstack(r_out.columns(0, sp.n), f, sp);
  const SampleBatch ref3 = SampleBatch::hstack(standard_normal(rx_ref, n_latent, sp.n), ref.columns(sp.n, sp.m), sp);
  const SampleBatch ref4 = SampleBatch::hstack(ref.columns(0, sp.n), standard_normal(ry_ref, n_latent, sp.m), sp);

  return {mmd(j1, ref, {std::nullopt, permutations, seed + 1}), mmd(j2, ref, {std::nullopt, permutations, seed + 2}),
          mmd(s_out, ref3, {std::nullopt, permutations, seed + 3}),
          mmd(r_out, ref4, {std::nullopt, permutations, seed + 4})};
}

Matrix fd_jacobian(const std::function<Vector(std::span<const double>)>& fn, std::span<const double> z) {
  Vector p(z.begin(), z.end());
  const std::size_t d = p.size();
  Matrix jac;
  for (std::size_t i = 0; i < d; ++i) {
    const double z0 = p[i], h = 1e-6 * (1.0 + std::abs(z0));
    p[i] = z0 + h;
    const Vector up = fn(p);
    p[i] = z0 - h;
    const Vector down = fn(p);
    p[i] = z0;
    if (i == 0) jac = Matrix(up.size(), d);
    for (std::size_t r = 0; r < up.size(); ++r) jac(r, i) = (up[r] - down[r]) / (2.0 * h);
  }
  return jac;
}

double s_condition_number(const JointMap& s, std::span<const double> uy) {
  const BlockSplit sp = s.split();
  require(uy.size() == sp.total(), ErrorCode::DimensionMismatch, "point does not match the map");
  const Matrix jac = fd_jacobian([&](std::span<const double> v) { return s.apply_s(v.first(sp.n), v.subspan(sp.n)); }, uy);
  return condition_number_2(jac);
}

}  // namespace biflow
