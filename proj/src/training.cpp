#include "biflow/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "biflow/error.hpp"
#include "biflow/io.hpp"
#include "biflow/parallel.hpp"
#include "biflow/random.hpp"

namespace biflow {

namespace {

void require_inverse(const MonotoneTriangularMap& t) {
  require(t.parametrization() == Parametrization::Inverse, ErrorCode::InvalidArgument,
          "training needs the inverse parametrization");
}

// Standardized internal coordinates of every sample, stored contiguously.
std::vector<double> internal_points(const MonotoneTriangularMap& t, const SampleBatch& batch) {
  require(batch.dimension() == t.dimension(), ErrorCode::DimensionMismatch, "batch dimension does not match the map");
  std::vector<double> x;
  x.reserve(batch.values().size());
  for (std::size_t s = 0; s < batch.count(); ++s) {
    const Vector v = t.standardized_internal(batch.sample(s));
    x.insert(x.end(), v.begin(), v.end());
  }
  return x;
}

double sum_log_scale(const MonotoneTriangularMap& t) {
  double s = 0.0;
  for (double v : t.data_scale()) s += std::log(v);
  return s;
}

// Sum over the listed samples of component c's objective term; adds the
// gradient to grad when it is non-empty.
double component_sum(const MonotoneComponent& c, const std::vector<double>& x, std::size_t d,
                     std::span<const std::size_t> samples, std::span<double> grad,
                     MonotoneComponent::Workspace& ws) {
  double total = 0.0;
  for (std::size_t s : samples) total += c.kl_term(std::span<const double>(x.data() + s * d, c.input_dim()), grad, ws);
  return total;
}

Vector fd_component_gradient(MonotoneComponent c, const std::vector<double>& x, std::size_t d,
                             std::span<const std::size_t> samples, MonotoneComponent::Workspace& ws) {
  Vector p = c.parameters();
  Vector g(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double c0 = p[j], h = 1e-5 * (1.0 + std::abs(c0));
    p[j] = c0 + h;
    c.set_parameters(p);
    const double up = component_sum(c, x, d, samples, {}, ws);
    p[j] = c0 - h;
    c.set_parameters(p);
    const double down = component_sum(c, x, d, samples, {}, ws);
    p[j] = c0;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace

void TrainConfig::validate() const {
  require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorCode::InvalidArgument,
          "learning_rate must be positive");
  require(batch_size >= 1, ErrorCode::InvalidArgument, "batch_size must be at least 1");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
          ErrorCode::InvalidArgument, "Adam betas must lie in [0, 1)");
  require(adam_eps > 0.0, ErrorCode::InvalidArgument, "adam_eps must be positive");
}

nlohmann::json TrainReport::to_json() const {
  return {{"loss_trace", loss_trace}, {"final_loss", final_loss}, {"converged", converged}, {"wall_time_s", wall_time_s}};
}

void TrainReport::write_loss_csv(const std::string& path) const {
  std::string text = "epoch,loss\n";
  for (std::size_t e = 0; e < loss_trace.size(); ++e) text += std::to_string(e) + ',' + format_double(loss_trace[e]) + '\n';
  write_text(path, text);
}

double kl_objective(const TriangularMap& t, const SampleBatch& batch) {
  require(batch.dimension() == t.dimension(), ErrorCode::DimensionMismatch, "batch dimension does not match the map");
  require(batch.count() >= 1, ErrorCode::InsufficientSamples, "objective needs at least one sample");
  std::vector<double> shard_sum(kShardCount, 0.0);
  for_each_shard(batch.count(), [&](std::size_t shard, std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const Vector z = t.inverse(batch.sample(i));
      s += 0.5 * std::inner_product(z.begin(), z.end(), z.begin(), 0.0) - t.log_det_inverse(batch.sample(i));
    }
    shard_sum[shard] = s;
  });
  return std::accumulate(shard_sum.begin(), shard_sum.end(), 0.0) / static_cast<double>(batch.count());
}

Vector map_parameters(const MonotoneTriangularMap& t) {
  Vector p;
  for (const auto& c : t.components()) {
    const Vector q = c.parameters();
    p.insert(p.end(), q.begin(), q.end());
  }
  return p;
}

void set_map_parameters(MonotoneTriangularMap& t, std::span<const double> p) {
  std::size_t off = 0;
  for (std::size_t i = 0; i < t.components().size(); ++i) {
    auto& c = t.component(i);
    require(off + c.parameter_count() <= p.size(), ErrorCode::DimensionMismatch, "parameter vector too short");
    c.set_parameters(p.subspan(off, c.parameter_count()));
    off += c.parameter_count();
  }
  require(off == p.size(), ErrorCode::DimensionMismatch, "parameter vector too long");
}

Vector kl_gradient(const MonotoneTriangularMap& t, const SampleBatch& batch) {
  require_inverse(t);
  require(batch.count() >= 1, ErrorCode::InsufficientSamples, "gradient needs at least one sample");
  const std::vector<double> x = internal_points(t, batch);
  const std::size_t d = t.dimension(), np = map_parameters(t).size();
  std::vector<Vector> shard_grad(kShardCount, Vector(np, 0.0));
  for_each_shard(batch.count(), [&](std::size_t shard, std::size_t begin, std::size_t end) {
    std::vector<std::size_t> samples(end - begin);
    std::iota(samples.begin(), samples.end(), begin);
    MonotoneComponent::Workspace ws;
    std::size_t off = 0;
    for (const auto& c : t.components()) {
      component_sum(c, x, d, samples, std::span<double>(shard_grad[shard]).subspan(off, c.parameter_count()), ws);
      off += c.parameter_count();
    }
  });
  Vector g(np, 0.0);
  for (const auto& sg : shard_grad)
    for (std::size_t j = 0; j < np; ++j) g[j] += sg[j];
  for (double& v : g) v /= static_cast<double>(batch.count());
  return g;
}

Vector kl_gradient_fd(const MonotoneTriangularMap& t, const SampleBatch& batch) {
  require_inverse(t);
  require(batch.count() >= 1, ErrorCode::InsufficientSamples, "gradient needs at least one sample");
  const std::vector<double> x = internal_points(t, batch);
  std::vector<std::size_t> samples(batch.count());
  std::iota(samples.begin(), samples.end(), 0);
  MonotoneComponent::Workspace ws;
  Vector g;
  for (const auto& c : t.components()) {
    const Vector gc = fd_component_gradient(c, x, t.dimension(), samples, ws);
    g.insert(g.end(), gc.begin(), gc.end());
  }
  for (double& v : g) v /= static_cast<double>(batch.count());
  return g;
}

TrainReport fit_map(MonotoneTriangularMap& t, const SampleBatch& data, const TrainConfig& cfg) {
  cfg.validate();
  require_inverse(t);
  require(data.dimension() == t.dimension(), ErrorCode::DimensionMismatch, "data dimension does not match the map");
  require(data.count() >= 2, ErrorCode::InsufficientSamples, "training needs at least two samples");
  require(data.all_finite(), ErrorCode::InvalidArgument, "training data must be finite");
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  if (cfg.epochs == 0) {
    report.final_loss = kl_objective(t, data);
    return report;
  }

  const std::size_t d = t.dimension(), n = data.count();
  if (cfg.standardize) {
    Vector shift(d, 0.0), scale(d, 0.0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t j = 0; j < d; ++j) shift[j] += data(s, j);
    for (double& v : shift) v /= static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t j = 0; j < d; ++j) scale[j] += (data(s, j) - shift[j]) * (data(s, j) - shift[j]);
    for (double& v : scale) {
      v = std::sqrt(v / static_cast<double>(n - 1));
      if (!(v > 0.0)) v = 1.0;
    }
    t.set_standardization(std::move(shift), std::move(scale));
  }
  const std::vector<double> x = internal_points(t, data);
  const std::size_t batch = std::min(cfg.batch_size, n);
  const std::size_t batches = (n + batch - 1) / batch;

  std::vector<std::vector<double>> traces(d);
  parallel_for(d, [&](std::size_t ci) {
    MonotoneComponent& comp = t.component(ci);
    Vector p = comp.parameters();
    Vector m(p.size(), 0.0), v(p.size(), 0.0), grad(p.size());
    MonotoneComponent::Workspace ws;
    // Every component draws the same minibatch sequence.
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::uint64_t step = 0;
    traces[ci].reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      shuffle(order.begin(), order.end(), rng);
      double epoch_sum = 0.0;
      for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t begin = b * batch, len = std::min(batch, n - begin);
        const std::span<const std::size_t> samples(order.data() + begin, len);
        std::fill(grad.begin(), grad.end(), 0.0);
        const double obj = component_sum(comp, x, d, samples, grad, ws) / static_cast<double>(len);
        if (!std::isfinite(obj)) fail(ErrorCode::DivergedLoss, "training objective is not finite");
        if (cfg.grad_mode == GradMode::FiniteDifference) grad = fd_component_gradient(comp, x, d, samples, ws);
        else
          for (double& g : grad) g /= static_cast<double>(len);
        epoch_sum += obj;

        ++step;
        const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
        for (std::size_t j = 0; j < p.size(); ++j) {
          m[j] = cfg.adam_beta1 * m[j] + (1.0 - cfg.adam_beta1) * grad[j];
          v[j] = cfg.adam_beta2 * v[j] + (1.0 - cfg.adam_beta2) * grad[j] * grad[j];
          p[j] -= cfg.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.adam_eps);
        }
        comp.set_parameters(p);
      }
      traces[ci].push_back(epoch_sum / static_cast<double>(batches));
    }
  });

  const double log_scale = sum_log_scale(t);
  report.loss_trace.assign(cfg.epochs, log_scale);
  for (const auto& tr : traces)
    for (std::size_t e = 0; e < cfg.epochs; ++e) report.loss_trace[e] += tr[e];
  const auto& tr = report.loss_trace;
  if (tr.size() > 10) {
    const double before = tr[tr.size() - 11], after = tr.back();
    report.converged = (before - after) / std::max(std::abs(before), 1e-12) < 1e-5;
  }
  report.final_loss = kl_objective(t, data);
  if (!std::isfinite(report.final_loss)) fail(ErrorCode::DivergedLoss, "trained objective is not finite");
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace biflow
