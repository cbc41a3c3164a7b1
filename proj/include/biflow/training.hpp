#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "biflow/monotone_map.hpp"
#include "biflow/sample_batch.hpp"

namespace biflow {

enum class GradMode { Analytic, FiniteDifference };

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t batch_size = 256;
  std::size_t epochs = 200;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  GradMode grad_mode = GradMode::Analytic;
  /// Reset the map's standardization to the data mean and std before fitting.
  bool standardize = true;

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss_trace;  // mean minibatch objective per epoch
  double final_loss = 0.0;
  bool converged = false;
  double wall_time_s = 0.0;

  nlohmann::json to_json() const;
  /// epoch,loss
  void write_loss_csv(const std::string& path) const;
};

/// Mean over the batch of 0.5 |T^-1(w)|^2 - log |det grad T^-1(w)|.
double kl_objective(const TriangularMap& t, const SampleBatch& batch);

/// All component parameters, component 0 first.
Vector map_parameters(const MonotoneTriangularMap& t);
void set_map_parameters(MonotoneTriangularMap& t, std::span<const double> p);

/// Gradient of kl_objective with respect to map_parameters(t). The map must
/// use the inverse parametrization.
Vector kl_gradient(const MonotoneTriangularMap& t, const SampleBatch& batch);
/// Central differences with step 1e-5 (1 + |c|) per coefficient.
Vector kl_gradient_fd(const MonotoneTriangularMap& t, const SampleBatch& batch);

/// Adam on the KL objective. Components are trained independently on the
/// same minibatch sequence; the loss trace is the joint objective. Throws
/// DivergedLoss when a minibatch objective is not finite.
TrainReport fit_map(MonotoneTriangularMap& t, const SampleBatch& data, const TrainConfig& cfg);

}  // namespace biflow
