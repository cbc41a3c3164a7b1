#include "biflow/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "biflow/error.hpp"
#include "biflow/gaussian_model.hpp"
#include "biflow/io.hpp"
#include "biflow/map_io.hpp"
#include "biflow/monotone_map.hpp"
#include "biflow/parallel.hpp"
#include "biflow/training.hpp"

namespace biflow {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string prepare_out(const std::string& out) {
  require(!out.empty(), ErrorCode::InvalidArgument, "--out is required");
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory " + out + ": " + ec.message());
  return out;
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_manifest(const std::string& out, const std::string& command, const json& config, std::uint64_t seed,
                    const std::vector<std::string>& inputs) {
  json in = json::array();
  for (const auto& p : inputs) in.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  const json doc = {{"command", command}, {"config", config}, {"seed", seed}, {"inputs", in}, {"version", kVersion}};
  write_text(join(out, "manifest.json"), doc.dump(2) + "\n");
}

double median(std::vector<double> v) {
  require(!v.empty(), ErrorCode::InsufficientSamples, "median of an empty list");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

const SignTargetMap& require_sign_target(const StoredModel& m) {
  const auto* t = dynamic_cast<const SignTargetMap*>(m.f_check.get());
  require(t != nullptr, ErrorCode::BadModel, "model is not a nonlinear sign-target model");
  return *t;
}

std::string csv_row(std::initializer_list<double> values) {
  std::string s;
  for (double v : values) {
    if (!s.empty()) s += ',';
    s += format_double(v);
  }
  return s + '\n';
}

struct PixelStats {
  Vector mean, sd;
};

PixelStats pixel_stats(const SampleBatch& s) {
  const std::size_t d = s.dimension(), n = s.count();
  PixelStats p{Vector(d, 0.0), Vector(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) p.mean[j] += s(i, j);
  for (double& v : p.mean) v /= static_cast<double>(n);
  if (n < 2) return p;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) p.sd[j] += (s(i, j) - p.mean[j]) * (s(i, j) - p.mean[j]);
  for (double& v : p.sd) v = std::sqrt(v / static_cast<double>(n - 1));
  return p;
}

}  // namespace

void save_model(const std::string& path, const StoredModel& model) {
  const json doc = {{"type", "bidirectional"},
                    {"f_check", map_to_json(*model.f_check)},
                    {"f_hat", map_to_json(*model.f_hat)},
                    {"meta", model.meta}};
  write_text(path, doc.dump(1) + "\n");
}

StoredModel load_model(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::BadModel, std::string("model file is not valid JSON: ") + e.what());
  }
  require(doc.is_object() && doc.value("type", "") == "bidirectional", ErrorCode::BadModel,
          "model file is not a bidirectional model");
  require(doc.contains("f_check") && doc.contains("f_hat"), ErrorCode::BadModel, "model lacks factor maps");
  StoredModel m{map_from_json(doc["f_check"]), map_from_json(doc["f_hat"]), doc.value("meta", json::object())};
  (void)m.bidirectional();  // validates orientations and splits
  return m;
}

SampleBatch sign_target_samples(double a, double b, std::size_t n, std::uint64_t seed) {
  const SignTargetMap target(a, b);
  Rng rng(seed);
  const SampleBatch z = standard_normal(rng, n, 2);
  SampleBatch out(2, BlockSplit{1, 1});
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(target.forward(z.sample(i)));
  return out;
}

std::vector<double> sign_target_posterior_bins(double a, double b, double f, std::span<const double> edges) {
  require(edges.size() >= 2, ErrorCode::InvalidArgument, "need at least one bin");
  const double w_pos = std::exp(-0.5 * (f - 1.0) * (f - 1.0) / (b * b));
  const double w_neg = std::exp(-0.5 * (f + 1.0) * (f + 1.0) / (b * b));
  const double z = 0.5 * (w_pos + w_neg);
  std::vector<double> p(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double l = edges[i], r = edges[i + 1];
    const double pos = normal_cdf(std::max(r, 0.0), 0.0, a) - normal_cdf(std::max(l, 0.0), 0.0, a);
    const double neg = normal_cdf(std::min(r, 0.0), 0.0, a) - normal_cdf(std::min(l, 0.0), 0.0, a);
    p[i] = (w_pos * pos + w_neg * neg) / z;
  }
  return p;
}

void cmd_gaussian_sweep(const GaussianSweepConfig& cfg) {
  require(cfg.steps >= 1, ErrorCode::InvalidArgument, "sigma grid is empty (--steps must be >= 1)");
  require(cfg.sigma_min > 0.0 && cfg.sigma_max >= cfg.sigma_min, ErrorCode::InvalidArgument,
          "need 0 < sigma-min <= sigma-max");
  const std::string out = prepare_out(cfg.out);
  const Matrix k{{2.0, 1.0}, {1.0, 2.0}};
  const auto sigmas = log_grid(cfg.sigma_min, cfg.sigma_max, cfg.steps);
  write_sweep_csv(join(out, "sweep.csv"), condition_sweep(k, Matrix::identity(2), sigmas));
  write_manifest(out, "gaussian-sweep",
                 {{"sigma_min", cfg.sigma_min}, {"sigma_max", cfg.sigma_max}, {"steps", cfg.steps},
                  {"k", {{2.0, 1.0}, {1.0, 2.0}}}, {"sigma_u", "identity"}},
                 cfg.seed, {});
}

void cmd_nonlinear_train(const NonlinearTrainConfig& cfg) {
  require(cfg.a > 0.0 && cfg.b > 0.0, ErrorCode::InvalidArgument, "--a and --b must be positive");
  require(cfg.samples >= 2, ErrorCode::InvalidArgument, "--samples must be at least 2");
  const std::string out = prepare_out(cfg.out);
  const SampleBatch data = sign_target_samples(cfg.a, cfg.b, cfg.samples, cfg.seed);
  auto f_hat = std::make_shared<MonotoneTriangularMap>(
      MonotoneTriangularMap::identity({1, 1}, Orientation::Upper, Parametrization::Inverse, cfg.order));
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.seed = cfg.seed;
  const TrainReport report = fit_map(*f_hat, data, tc);

  const json config = {{"a", cfg.a}, {"b", cfg.b}, {"order", cfg.order}, {"samples", cfg.samples},
                       {"epochs", cfg.epochs}, {"learning_rate", tc.learning_rate}, {"batch_size", tc.batch_size}};
  save_model(join(out, "model.json"),
             {std::make_shared<SignTargetMap>(cfg.a, cfg.b), f_hat, {{"kind", "nonlinear"}, {"train", config}}});
  write_text(join(out, "train_report.json"), report.to_json().dump(2) + "\n");
  report.write_loss_csv(join(out, "loss.csv"));
  write_manifest(out, "nonlinear train", config, cfg.seed, {});
}

void cmd_nonlinear_sample(const NonlinearSampleConfig& cfg) {
  const auto eq = cfg.condition.find('=');
  require(eq != std::string::npos, ErrorCode::InvalidArgument, "--condition must be u=VALUE or f=VALUE");
  const std::string var = cfg.condition.substr(0, eq);
  require(var == "u" || var == "f", ErrorCode::InvalidArgument, "--condition must be u=VALUE or f=VALUE");
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(cfg.condition.substr(eq + 1), &used);
    require(used == cfg.condition.size() - eq - 1, ErrorCode::InvalidArgument, "bad condition value");
  } catch (const std::logic_error&) {
    fail(ErrorCode::InvalidArgument, "bad condition value in '" + cfg.condition + "'");
  }
  require(cfg.n >= 1, ErrorCode::InvalidArgument, "--n must be at least 1");
  const std::string out = prepare_out(cfg.out);
  const StoredModel model = load_model(cfg.model);
  const BidirectionalMap s = model.bidirectional();
  require(s.n() == 1 && s.m() == 1, ErrorCode::BadModel, "sample expects a two-dimensional model");
  const Vector c{value};
  const SampleBatch samples = var == "u" ? simulate(s, c, cfg.n, cfg.seed) : infer(s, c, cfg.n, cfg.seed);
  samples.write_csv(join(out, "samples.csv"));
  write_manifest(out, "nonlinear sample", {{"model", cfg.model}, {"condition", cfg.condition}, {"n", cfg.n}},
                 cfg.seed, {cfg.model});
}

json cmd_nonlinear_evaluate(const NonlinearEvaluateConfig& cfg) {
  require(cfg.grid >= 1 && cfg.n_conditional >= 2, ErrorCode::InvalidArgument, "evaluation sizes must be positive");
  const std::string out = prepare_out(cfg.out);
  const StoredModel model = load_model(cfg.model);
  const SignTargetMap& target = require_sign_target(model);
  const BidirectionalMap s = model.bidirectional();
  const Rng root(cfg.seed);
  json diag;

  // Likelihood at u = 0.5 against N(sign(0.5), b^2).
  const double u0 = 0.5;
  const SampleBatch fs = simulate(s, Vector{u0}, cfg.n_conditional, root.split(1).next_u64());
  const double mu = sign_nonneg(u0);
  diag["simulate"] = {{"u", u0},
                      {"n", cfg.n_conditional},
                      {"ks", ks_statistic(fs.coordinate(0), [&](double x) { return normal_cdf(x, mu, target.b()); })}};

  // Posterior at f = 1 against the closed-form bin probabilities.
  const double f0 = 1.0;
  const SampleBatch us = infer(s, Vector{f0}, cfg.n_conditional, root.split(2).next_u64());
  const Histogram h = histogram(us.coordinate(0), 40, -4.0, 4.0);
  const auto probs = sign_target_posterior_bins(target.a(), target.b(), f0, h.edges);
  std::string hist = "bin_left,bin_right,count,reference_prob\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    hist += format_double(h.edges[i]) + ',' + format_double(h.edges[i + 1]) + ',' + std::to_string(h.counts[i]) +
            ',' + format_double(probs[i]) + '\n';
  write_text(join(out, "posterior_hist.csv"), hist);
  diag["infer"] = {{"f", f0}, {"n", cfg.n_conditional}, {"bins", 40}, {"range", {-4.0, 4.0}},
                   {"tv", total_variation(h, probs)}};

  // J losses and latent marginals on fresh joint data.
  const SampleBatch data = sign_target_samples(target.a(), target.b(), 2 * cfg.n_mmd, root.split(3).next_u64());
  const auto j = j_losses(s, data, cfg.n_mmd, root.split(4).next_u64(), cfg.permutations);
  diag["j_losses"] = json::array();
  for (const auto& e : j) diag["j_losses"].push_back(e.to_json());
  const LatentCheck lc = latent_marginal_check(s, data, cfg.n_mmd, root.split(5).next_u64(), cfg.permutations);
  diag["latent_check"] = {{"r2", lc.r2.to_json()}, {"s1", lc.s1.to_json()}};

  // Condition numbers over a square grid on [-2, 2]^2.
  const std::size_t g = cfg.grid, pts = g * g;
  std::vector<double> kc(pts), kh(pts), ks(pts);
  auto coord = [&](std::size_t i) { return g == 1 ? 0.0 : -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(g - 1); };
  parallel_for(pts, [&](std::size_t p) {
    const Vector z{coord(p / g), coord(p % g)};
    kc[p] = condition_number_2(fd_jacobian([&](std::span<const double> v) { return s.f_check().forward(v); }, z));
    kh[p] = condition_number_2(fd_jacobian([&](std::span<const double> v) { return s.f_hat().forward(v); }, z));
    ks[p] = s_condition_number(s, z);
  });
  std::string grid = "p0,p1,kappa_f_check,kappa_f_hat,kappa_s\n";
  for (std::size_t p = 0; p < pts; ++p) grid += csv_row({coord(p / g), coord(p % g), kc[p], kh[p], ks[p]});
  write_text(join(out, "condition_grid.csv"), grid);
  diag["condition"] = {{"grid", g}, {"median_kappa_f_check", median(kc)}, {"median_kappa_f_hat", median(kh)},
                       {"median_kappa_s", median(ks)}};

  // Endpoint pairs of the three maps on reference draws.
  Rng flow_rng = root.split(6);
  const SampleBatch ref = standard_normal(flow_rng, cfg.flow_points, 2);
  std::string flow = "map,in_0,in_1,out_0,out_1\n";
  for (std::size_t i = 0; i < ref.count(); ++i) {
    const auto z = ref.sample(i);
    const Vector fc = s.f_check().forward(z), fh = s.f_hat().forward(z);
    const Vector uy{target.a() * z[0], z[1]};
    const Vector so = s.apply_s(Vector{uy[0]}, Vector{uy[1]});
    flow += "f_check," + csv_row({z[0], z[1], fc[0], fc[1]});
    flow += "f_hat," + csv_row({z[0], z[1], fh[0], fh[1]});
    flow += "s," + csv_row({uy[0], uy[1], so[0], so[1]});
  }
  write_text(join(out, "flow_pairs.csv"), flow);

  write_text(join(out, "diagnostics.json"), diag.dump(2) + "\n");
  write_manifest(out, "nonlinear evaluate",
                 {{"model", cfg.model}, {"n_conditional", cfg.n_conditional}, {"n_mmd", cfg.n_mmd},
                  {"permutations", cfg.permutations}, {"grid", cfg.grid}, {"flow_points", cfg.flow_points}},
                 cfg.seed, {cfg.model});
  return diag;
}

ImageBatch load_model_images(const std::string& path, std::size_t downscale_factor) {
  ImageBatch images = load_idx_images(path);
  return downscale_factor > 1 ? downscale(images, downscale_factor) : images;
}

void cmd_inpaint_fit(const InpaintFitConfig& cfg) {
  require(cfg.mask == "bottom-half", ErrorCode::InvalidArgument, "--mask supports only bottom-half");
  require(cfg.downscale >= 1, ErrorCode::InvalidArgument, "--downscale must be at least 1");
  require(cfg.noise >= 0.0 && cfg.ridge >= 0.0, ErrorCode::InvalidArgument, "--noise and --ridge must be >= 0");
  const std::string out = prepare_out(cfg.out);
  const ImageBatch all = load_model_images(cfg.images, cfg.downscale);
  require(cfg.n_train >= 2 && cfg.n_train <= all.count, ErrorCode::InvalidArgument,
          "--n-train must be between 2 and the number of images");
  const ImageBatch train = all.slice(0, cfg.n_train);
  const MaskOperator mask = MaskOperator::bottom_half_removed(all.height, all.width);
  Rng rng(cfg.seed);
  const SampleBatch pairs = build_pairs(train, mask, cfg.noise, rng);
  const EmpiricalGaussian fit = fit_empirical_gaussian(pairs, cfg.ridge);
  const GaussianMaps maps = build_maps_from_joint(fit.cov, fit.split);
  const BidirectionalMap s = gaussian_bidirectional(maps, fit.mean);

  const json config = {{"images", cfg.images}, {"ridge", cfg.ridge}, {"mask", cfg.mask},
                       {"downscale", cfg.downscale}, {"n_train", cfg.n_train}, {"noise", cfg.noise}};
  const json meta = {{"kind", "inpaint"}, {"height", all.height}, {"width", all.width},
                     {"downscale", cfg.downscale}, {"noise", cfg.noise}, {"ridge", cfg.ridge},
                     {"n_train", cfg.n_train}, {"keep_indices", mask.keep_indices()},
                     {"total_pixels", mask.total_pixels()}, {"mean", fit.mean},
                     {"r_formula_deviation", maps.r_formula_deviation}};
  save_model(join(out, "model.json"), {s.f_check_ptr(), s.f_hat_ptr(), meta});
  write_pgm(join(out, "mean_image.pgm"), std::span<const double>(fit.mean).first(mask.total_pixels()), all.height,
            all.width);
  write_manifest(out, "inpaint fit", config, cfg.seed, {cfg.images});
}

InpaintModel load_inpaint_model(const std::string& path) {
  InpaintModel m;
  m.stored = load_model(path);
  const json& meta = m.stored.meta;
  require(meta.value("kind", "") == "inpaint", ErrorCode::BadModel, "model is not an inpainting model");
  try {
    m.height = meta.at("height").get<std::size_t>();
    m.width = meta.at("width").get<std::size_t>();
    m.downscale = meta.at("downscale").get<std::size_t>();
    m.noise = meta.at("noise").get<double>();
    m.mask = MaskOperator(meta.at("keep_indices").get<std::vector<std::size_t>>(),
                          meta.at("total_pixels").get<std::size_t>());
    m.mean = meta.at("mean").get<Vector>();
  } catch (const json::exception& e) {
    fail(ErrorCode::BadModel, std::string("inpainting metadata is malformed: ") + e.what());
  }
  require(m.mask.total_pixels() == m.height * m.width && m.stored.f_check->split().n == m.mask.total_pixels() &&
              m.stored.f_check->split().m == m.mask.measured_size(),
          ErrorCode::BadModel, "inpainting metadata does not match the maps");
  return m;
}

namespace {

struct InpaintInputs {
  InpaintModel model;
  Vector truth;
  std::string out;
};

InpaintInputs prepare_inpaint(const InpaintSampleConfig& cfg) {
  require(cfg.n >= 1, ErrorCode::InvalidArgument, "--n must be at least 1");
  InpaintInputs in;
  in.out = prepare_out(cfg.out);
  in.model = load_inpaint_model(cfg.model);
  const ImageBatch images = load_model_images(cfg.images, in.model.downscale);
  require(images.height == in.model.height && images.width == in.model.width, ErrorCode::DimensionMismatch,
          "images do not match the model geometry");
  require(cfg.index < images.count, ErrorCode::InvalidArgument, "--index is out of range");
  const auto img = images.image(cfg.index);
  in.truth.assign(img.begin(), img.end());
  write_pgm(join(in.out, "true.pgm"), in.truth, in.model.height, in.model.width);
  return in;
}

json sample_config(const InpaintSampleConfig& cfg) {
  return {{"model", cfg.model}, {"images", cfg.images}, {"index", cfg.index}, {"n", cfg.n}};
}

}  // namespace

void cmd_inpaint_simulate(const InpaintSampleConfig& cfg) {
  const InpaintInputs in = prepare_inpaint(cfg);
  const BidirectionalMap s = in.model.stored.bidirectional();
  const SampleBatch f = simulate(s, in.truth, cfg.n, cfg.seed);
  f.write_csv(join(in.out, "simulated.csv"));
  const PixelStats st = pixel_stats(f);
  const Vector expected = in.model.mask.apply(in.truth);
  std::string csv = "pixel,expected,mean,std\n";
  for (std::size_t j = 0; j < expected.size(); ++j)
    csv += std::to_string(in.model.mask.keep_indices()[j]) + ',' + csv_row({expected[j], st.mean[j], st.sd[j]});
  write_text(join(in.out, "simulate_stats.csv"), csv);
  write_pgm(join(in.out, "simulated_mean.pgm"), in.model.mask.embed(st.mean), in.model.height, in.model.width);
  write_manifest(in.out, "inpaint simulate", sample_config(cfg), cfg.seed, {cfg.model, cfg.images});
}

void cmd_inpaint_infer(const InpaintSampleConfig& cfg) {
  const InpaintInputs in = prepare_inpaint(cfg);
  const BidirectionalMap s = in.model.stored.bidirectional();
  const MaskOperator& mask = in.model.mask;
  Vector f = mask.apply(in.truth);
  Rng noise_rng = Rng(cfg.seed).split(1);
  for (double& v : f) v += in.model.noise * noise_rng.normal();
  const SampleBatch u = infer(s, f, cfg.n, cfg.seed);
  u.write_csv(join(in.out, "posterior.csv"));
  const PixelStats st = pixel_stats(u);

  std::vector<char> observed(mask.total_pixels(), 0);
  for (std::size_t k : mask.keep_indices()) observed[k] = 1;
  std::string csv = "pixel,observed,true,mean,std\n";
  for (std::size_t j = 0; j < st.mean.size(); ++j)
    csv += std::to_string(j) + ',' + std::to_string(int{observed[j]}) + ',' +
           csv_row({in.truth[j], st.mean[j], st.sd[j]});
  write_text(join(in.out, "posterior_stats.csv"), csv);
  write_pgm(join(in.out, "observed.pgm"), mask.embed(f), in.model.height, in.model.width);
  write_pgm(join(in.out, "posterior_mean.pgm"), st.mean, in.model.height, in.model.width);
  write_pgm(join(in.out, "posterior_std.pgm"), st.sd, in.model.height, in.model.width);
  for (std::size_t i = 0; i < std::min<std::size_t>(cfg.n, 16); ++i)
    write_pgm(join(in.out, "sample_" + std::to_string(i) + ".pgm"), u.sample(i), in.model.height, in.model.width);
  write_manifest(in.out, "inpaint infer", sample_config(cfg), cfg.seed, {cfg.model, cfg.images});
}

}  // namespace biflow
