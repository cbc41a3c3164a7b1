#include "biflow/datasets.hpp"

#include <algorithm>
#include <cmath>

#include "biflow/error.hpp"
#include "biflow/io.hpp"
#include "biflow/stats.hpp"

namespace biflow {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  require(b.size() >= at + 4, ErrorCode::TruncatedFile, "IDX header is truncated");
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

void check_payload(const std::vector<std::uint8_t>& bytes, std::size_t header, std::size_t expected) {
  require(bytes.size() >= header + expected, ErrorCode::TruncatedFile, "IDX payload is truncated");
  require(bytes.size() == header + expected, ErrorCode::DimensionMismatch,
          "IDX payload is longer than its declared dimensions");
}

std::uint8_t to_byte(double p) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0));
}

}  // namespace

ImageBatch ImageBatch::slice(std::size_t begin, std::size_t len) const {
  require(begin + len <= count, ErrorCode::DimensionMismatch, "image slice out of range");
  ImageBatch out{len, height, width, {}};
  const auto ppi = static_cast<std::ptrdiff_t>(pixels_per_image());
  out.pixels.assign(pixels.begin() + static_cast<std::ptrdiff_t>(begin) * ppi,
                    pixels.begin() + static_cast<std::ptrdiff_t>(begin + len) * ppi);
  return out;
}

IdxData load_idx(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic == kImageMagic) {
    ImageBatch out;
    out.count = read_be32(bytes, 4);
    out.height = read_be32(bytes, 8);
    out.width = read_be32(bytes, 12);
    check_payload(bytes, 16, out.count * out.height * out.width);
    out.pixels.resize(out.count * out.height * out.width);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = bytes[16 + i] / 255.0;
    return out;
  }
  if (magic == kLabelMagic) {
    const std::size_t n = read_be32(bytes, 4);
    check_payload(bytes, 8, n);
    return std::vector<std::uint8_t>(bytes.begin() + 8, bytes.end());
  }
  fail(ErrorCode::BadMagic, "unrecognized IDX magic in " + path);
}

ImageBatch load_idx_images(const std::string& path) {
  IdxData d = load_idx(path);
  require(std::holds_alternative<ImageBatch>(d), ErrorCode::BadMagic, "IDX file holds labels, not images");
  return std::get<ImageBatch>(std::move(d));
}

std::vector<std::uint8_t> load_idx_labels(const std::string& path) {
  IdxData d = load_idx(path);
  require(std::holds_alternative<std::vector<std::uint8_t>>(d), ErrorCode::BadMagic,
          "IDX file holds images, not labels");
  return std::get<std::vector<std::uint8_t>>(std::move(d));
}

void save_idx(const std::string& path, const ImageBatch& images) {
  std::vector<std::uint8_t> b;
  put_be32(b, kImageMagic);
  put_be32(b, static_cast<std::uint32_t>(images.count));
  put_be32(b, static_cast<std::uint32_t>(images.height));
  put_be32(b, static_cast<std::uint32_t>(images.width));
  for (double p : images.pixels) b.push_back(to_byte(p));
  write_file(path, b);
}

void save_idx(const std::string& path, std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> b;
  put_be32(b, kLabelMagic);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  write_file(path, b);
}

ImageBatch downscale(const ImageBatch& images, std::size_t factor) {
  require(factor >= 1, ErrorCode::InvalidArgument, "downscale factor must be positive");
  require(images.height % factor == 0 && images.width % factor == 0, ErrorCode::DimensionMismatch,
          "image size is not divisible by the downscale factor");
  ImageBatch out{images.count, images.height / factor, images.width / factor, {}};
  out.pixels.assign(out.count * out.pixels_per_image(), 0.0);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t i = 0; i < images.count; ++i) {
    const auto src = images.image(i);
    double* dst = out.pixels.data() + i * out.pixels_per_image();
    for (std::size_t r = 0; r < out.height; ++r)
      for (std::size_t c = 0; c < out.width; ++c) {
        double s = 0.0;
        for (std::size_t dr = 0; dr < factor; ++dr)
          for (std::size_t dc = 0; dc < factor; ++dc) s += src[(r * factor + dr) * images.width + c * factor + dc];
        dst[r * out.width + c] = s * inv;
      }
  }
  return out;
}

MaskOperator::MaskOperator(std::vector<std::size_t> keep_indices, std::size_t total_pixels)
    : keep_(std::move(keep_indices)), total_(total_pixels) {
  for (std::size_t j = 0; j < keep_.size(); ++j) {
    require(keep_[j] < total_, ErrorCode::DimensionMismatch, "mask index out of range");
    require(j == 0 || keep_[j] > keep_[j - 1], ErrorCode::InvalidArgument, "mask indices must increase strictly");
  }
}

MaskOperator MaskOperator::bottom_half_removed(std::size_t height, std::size_t width) {
  std::vector<std::size_t> keep(height / 2 * width);
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
  return MaskOperator(std::move(keep), height * width);
}

std::vector<std::size_t> MaskOperator::removed_indices() const {
  std::vector<std::size_t> out;
  std::size_t j = 0;
  for (std::size_t i = 0; i < total_; ++i) {
    if (j < keep_.size() && keep_[j] == i) ++j;
    else out.push_back(i);
  }
  return out;
}

Vector MaskOperator::apply(std::span<const double> u) const {
  require(u.size() == total_, ErrorCode::DimensionMismatch, "image length does not match the mask");
  Vector f(keep_.size());
  for (std::size_t j = 0; j < keep_.size(); ++j) f[j] = u[keep_[j]];
  return f;
}

Vector MaskOperator::embed(std::span<const double> f) const {
  require(f.size() == keep_.size(), ErrorCode::DimensionMismatch, "measurement length does not match the mask");
  Vector u(total_, 0.0);
  for (std::size_t j = 0; j < keep_.size(); ++j) u[keep_[j]] = f[j];
  return u;
}

SampleBatch build_pairs(const ImageBatch& images, const MaskOperator& op, double noise_sigma, Rng& rng) {
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), ErrorCode::InvalidArgument, "noise_sigma must be >= 0");
  require(images.count == 0 || images.pixels_per_image() == op.total_pixels(), ErrorCode::DimensionMismatch,
          "image size does not match the mask");
  const BlockSplit split{op.total_pixels(), op.measured_size()};
  SampleBatch out(split.total(), split);
  out.reserve(images.count);
  Vector row(split.total());
  for (std::size_t i = 0; i < images.count; ++i) {
    const auto u = images.image(i);
    std::copy(u.begin(), u.end(), row.begin());
    const Vector f = op.apply(u);
    for (std::size_t j = 0; j < f.size(); ++j) {
      const double e = rng.normal();
      row[split.n + j] = f[j] + noise_sigma * e;
    }
    out.push_back(row);
  }
  return out;
}

EmpiricalGaussian fit_empirical_gaussian(const SampleBatch& pairs, double ridge) {
  require(pairs.count() >= 2, ErrorCode::InsufficientSamples, "Gaussian fit needs at least two samples");
  require(ridge >= 0.0 && std::isfinite(ridge), ErrorCode::InvalidArgument, "ridge must be >= 0");
  const auto split = pairs.block_split();
  require(split.has_value(), ErrorCode::InvalidArgument, "pairs need a block split");
  Moments mom = empirical_moments(pairs);
  for (std::size_t i = 0; i < mom.cov.rows(); ++i) mom.cov(i, i) += ridge;
  return {std::move(mom.mean), std::move(mom.cov), *split};
}

void write_pgm(const std::string& path, std::span<const double> pixels, std::size_t height, std::size_t width) {
  require(pixels.size() == height * width, ErrorCode::DimensionMismatch, "pixel count does not match the image size");
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> b(header.begin(), header.end());
  for (double p : pixels) b.push_back(to_byte(p));
  write_file(path, b);
}

}  // namespace biflow
