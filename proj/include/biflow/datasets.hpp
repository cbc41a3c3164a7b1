#pragma once

// MNIST-style image ingestion and the masked-measurement inpainting problem.

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "biflow/linalg.hpp"
#include "biflow/random.hpp"
#include "biflow/sample_batch.hpp"

namespace biflow {

/// count images of height x width pixels in [0, 1], row-major, image after
/// image.
struct ImageBatch {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  std::size_t pixels_per_image() const noexcept { return height * width; }
  std::span<const double> image(std::size_t i) const {
    return {pixels.data() + i * pixels_per_image(), pixels_per_image()};
  }
  ImageBatch slice(std::size_t begin, std::size_t len) const;
};

using IdxData = std::variant<ImageBatch, std::vector<std::uint8_t>>;

/// Big-endian IDX: magic 0x00000803 gives images (bytes / 255), 0x00000801
/// labels. Gzip input is accepted. Throws BadMagic, TruncatedFile or
/// DimensionMismatch (trailing bytes).
IdxData load_idx(const std::string& path);
ImageBatch load_idx_images(const std::string& path);
std::vector<std::uint8_t> load_idx_labels(const std::string& path);

/// Pixels are written as round(255 p).
void save_idx(const std::string& path, const ImageBatch& images);
void save_idx(const std::string& path, std::span<const std::uint8_t> labels);

/// factor x factor block averages.
ImageBatch downscale(const ImageBatch& images, std::size_t factor);

/// Selection of pixels: output j copies input keep_indices[j].
class MaskOperator {
 public:
  MaskOperator(std::vector<std::size_t> keep_indices, std::size_t total_pixels);
  /// Keeps the top height / 2 rows, i.e. removes the bottom half.
  static MaskOperator bottom_half_removed(std::size_t height, std::size_t width);

  const std::vector<std::size_t>& keep_indices() const noexcept { return keep_; }
  std::size_t total_pixels() const noexcept { return total_; }
  std::size_t measured_size() const noexcept { return keep_.size(); }
  /// Pixel indices not in keep_indices, increasing.
  std::vector<std::size_t> removed_indices() const;

  Vector apply(std::span<const double> u) const;
  /// Places f at the kept pixels, zero elsewhere.
  Vector embed(std::span<const double> f) const;

 private:
  std::vector<std::size_t> keep_;
  std::size_t total_;
};

/// Rows (u, f) with f = mask(u) + noise_sigma * N(0, I) and split (n, m).
SampleBatch build_pairs(const ImageBatch& images, const MaskOperator& op, double noise_sigma, Rng& rng);

struct EmpiricalGaussian {
  Vector mean;
  Matrix cov;  // sample covariance (N - 1) plus ridge I
  BlockSplit split;
};

EmpiricalGaussian fit_empirical_gaussian(const SampleBatch& pairs, double ridge);

/// Binary PGM (P5, maxval 255); values are clamped to [0, 1].
void write_pgm(const std::string& path, std::span<const double> pixels, std::size_t height, std::size_t width);

}  // namespace biflow
