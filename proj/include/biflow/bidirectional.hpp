#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <utility>

#include "biflow/gaussian_model.hpp"
#include "biflow/mmd.hpp"
#include "biflow/triangular_map.hpp"

namespace biflow {

/// An invertible map on R^(n+m) read as S(u, y) = (x', f) and its inverse
/// R(x, f) = (u, y'). Results are the concatenated blocks.
class JointMap {
 public:
  virtual ~JointMap() = default;
  virtual BlockSplit split() const = 0;
  virtual Vector apply_s(std::span<const double> u, std::span<const double> y) const = 0;
  virtual Vector apply_r(std::span<const double> x, std::span<const double> f) const = 0;
};

/// S1(u, y) = F_post^-1(u; F_like(y; u)), S2(u, y) = F_like(y; u), and
/// R1(x, f) = F_post(x; f), R2(x, f) = F_like^-1(f; R1(x, f)).
class BidirectionalMap final : public JointMap {
 public:
  BidirectionalMap(std::shared_ptr<const TriangularMap> f_check, std::shared_ptr<const TriangularMap> f_hat);

  BlockSplit split() const override { return f_check_->split(); }
  std::size_t n() const noexcept { return f_check_->split().n; }
  std::size_t m() const noexcept { return f_check_->split().m; }
  const TriangularMap& f_check() const noexcept { return *f_check_; }
  const TriangularMap& f_hat() const noexcept { return *f_hat_; }
  std::shared_ptr<const TriangularMap> f_check_ptr() const noexcept { return f_check_; }
  std::shared_ptr<const TriangularMap> f_hat_ptr() const noexcept { return f_hat_; }

  Vector apply_s(std::span<const double> u, std::span<const double> y) const override;
  Vector apply_r(std::span<const double> x, std::span<const double> f) const override;

 private:
  std::shared_ptr<const TriangularMap> f_check_;
  std::shared_ptr<const TriangularMap> f_hat_;
};

/// Affine factors of a Gaussian model. `mean` (length n + m, empty for zero)
/// is added as the shift of both factors.
BidirectionalMap gaussian_bidirectional(const GaussianMaps& maps, std::span<const double> mean = {});

/// (u, y) -> (F_check_1^-1(u), F_hat_2(y)): correct block marginals, no
/// coupling between u and f.
class CounterexampleMap final : public JointMap {
 public:
  CounterexampleMap(std::shared_ptr<const TriangularMap> f_check, std::shared_ptr<const TriangularMap> f_hat);
  BlockSplit split() const override { return f_check_->split(); }
  Vector apply_s(std::span<const double> u, std::span<const double> y) const override;
  Vector apply_r(std::span<const double> x, std::span<const double> f) const override;

 private:
  std::shared_ptr<const TriangularMap> f_check_;
  std::shared_ptr<const TriangularMap> f_hat_;
};

/// The linear-Gaussian pair written through the forward operator:
/// S2(u, y) = K u + L_F y and S1(u, y) = P^-1 (u - S_post K^T S_F^-1 f),
/// with P the upper square root of the posterior covariance.
class FactoredAffineMap final : public JointMap {
 public:
  explicit FactoredAffineMap(const GaussianLinearProblem& problem);
  BlockSplit split() const override { return {k_.cols(), k_.rows()}; }
  Vector apply_s(std::span<const double> u, std::span<const double> y) const override;
  Vector apply_r(std::span<const double> x, std::span<const double> f) const override;

 private:
  Matrix k_, lf_, p_, gain_;  // gain = S_post K^T S_F^-1
};

/// n_samples draws of f given u: y ~ N(0, I_m) pushed through F_like(.; u).
SampleBatch simulate(const BidirectionalMap& b, std::span<const double> u, std::size_t n_samples, std::uint64_t seed);
/// n_samples draws of u given f: x ~ N(0, I_n) pushed through F_post(.; f).
SampleBatch infer(const BidirectionalMap& b, std::span<const double> f, std::size_t n_samples, std::uint64_t seed);

/// apply_s / apply_r over every sample of a joint batch.
SampleBatch apply_s(const JointMap& s, const SampleBatch& uy);
SampleBatch apply_r(const JointMap& s, const SampleBatch& xf);

struct LatentCheck {
  MmdEstimate r2;  // {R2(x_i, f_i)} against N(0, I_m)
  MmdEstimate s1;  // {S1(u_i, y_i)} against N(0, I_n)
};

/// Uses the first n_latent samples of data with fresh latents.
LatentCheck latent_marginal_check(const JointMap& s, const SampleBatch& data, std::size_t n_latent, std::uint64_t seed,
                                  std::size_t permutations = 200);

/// J1..J4. Samples [0, n_latent) of data are pushed through the map and
/// compared against the disjoint samples [n_latent, 2 n_latent).
std::array<MmdEstimate, 4> j_losses(const JointMap& s, const SampleBatch& data, std::size_t n_latent,
                                    std::uint64_t seed, std::size_t permutations = 200);

/// Central-difference Jacobian with step 1e-6 (1 + |z_i|).
Matrix fd_jacobian(const std::function<Vector(std::span<const double>)>& fn, std::span<const double> z);

/// 2-norm condition number of the finite-difference Jacobian of S at (u, y).
double s_condition_number(const JointMap& s, std::span<const double> uy);

}  // namespace biflow
