#pragma once

// The three experiments as callable commands. Each command writes its
// artifacts plus manifest.json into the output directory.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "biflow/bidirectional.hpp"
#include "biflow/datasets.hpp"
#include "biflow/stats.hpp"

namespace biflow {

struct GaussianSweepConfig {
  double sigma_min = 1e-6;
  double sigma_max = 1.0;
  std::size_t steps = 50;
  std::string out;
  std::uint64_t seed = 0;
};

struct NonlinearTrainConfig {
  double a = 1.0;
  double b = 0.5;
  std::size_t order = 4;
  std::size_t samples = 20000;
  std::size_t epochs = 200;
  std::string out;
  std::uint64_t seed = 0;
};

struct NonlinearSampleConfig {
  std::string model;
  std::string condition;  // "u=F" or "f=F"
  std::size_t n = 10000;
  std::string out;
  std::uint64_t seed = 0;
};

struct NonlinearEvaluateConfig {
  std::string model;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t n_conditional = 10000;
  std::size_t n_mmd = 2000;
  std::size_t permutations = 200;
  std::size_t grid = 41;
  std::size_t flow_points = 500;
};

struct InpaintFitConfig {
  std::string images;
  double ridge = 1e-3;
  std::string mask = "bottom-half";
  std::size_t downscale = 2;
  std::size_t n_train = 5000;
  double noise = 0.05;
  std::string out;
  std::uint64_t seed = 0;
};

struct InpaintSampleConfig {
  std::string model;
  std::string images;
  std::size_t index = 0;
  std::size_t n = 16;
  std::string out;
  std::uint64_t seed = 0;
};

void cmd_gaussian_sweep(const GaussianSweepConfig& cfg);
void cmd_nonlinear_train(const NonlinearTrainConfig& cfg);
void cmd_nonlinear_sample(const NonlinearSampleConfig& cfg);
/// Returns the diagnostics document it writes.
nlohmann::json cmd_nonlinear_evaluate(const NonlinearEvaluateConfig& cfg);
void cmd_inpaint_fit(const InpaintFitConfig& cfg);
void cmd_inpaint_simulate(const InpaintSampleConfig& cfg);
void cmd_inpaint_infer(const InpaintSampleConfig& cfg);

/// Two factor maps plus free-form metadata.
struct StoredModel {
  std::shared_ptr<const TriangularMap> f_check;
  std::shared_ptr<const TriangularMap> f_hat;
  nlohmann::json meta;

  BidirectionalMap bidirectional() const { return BidirectionalMap(f_check, f_hat); }
};

void save_model(const std::string& path, const StoredModel& model);
StoredModel load_model(const std::string& path);

/// Draws (u, f) = F_check(x, y) for the sign target with x, y ~ N(0, 1).
SampleBatch sign_target_samples(double a, double b, std::size_t n, std::uint64_t seed);

/// Bin probabilities of the sign-target posterior of u given f over the
/// histogram edges, from the closed form with normal CDFs.
std::vector<double> sign_target_posterior_bins(double a, double b, double f, std::span<const double> edges);

/// Inpainting model as fitted, with the image geometry it was fitted on.
struct InpaintModel {
  StoredModel stored;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t downscale = 1;
  double noise = 0.0;
  MaskOperator mask{{}, 0};
  Vector mean;  // joint mean (u, f)
};

InpaintModel load_inpaint_model(const std::string& path);
/// Images from path, downscaled as the model expects.
ImageBatch load_model_images(const std::string& path, std::size_t downscale);

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Reduced versions of the module property suites.
std::vector<SelftestCheck> run_selftest(bool fast);

}  // namespace biflow
