#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biflow/linalg.hpp"

namespace biflow {

/// Sizes of the (u, f) blocks of a joint vector: u has n entries, f has m.
struct BlockSplit {
  std::size_t n = 0;
  std::size_t m = 0;

  std::size_t total() const noexcept { return n + m; }
  friend bool operator==(const BlockSplit&, const BlockSplit&) = default;
};

/// N samples of dimension d. Each sample is stored contiguously, so the
/// batch is a d x N column-major array.
class SampleBatch {
 public:
  SampleBatch() = default;
  explicit SampleBatch(std::size_t dimension, std::optional<BlockSplit> split = std::nullopt);
  SampleBatch(std::size_t dimension, std::size_t count, std::vector<double> values,
              std::optional<BlockSplit> split = std::nullopt);

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t count() const noexcept { return dim_ ? values_.size() / dim_ : 0; }
  bool empty() const noexcept { return values_.empty(); }
  const std::optional<BlockSplit>& block_split() const noexcept { return split_; }
  void set_block_split(std::optional<BlockSplit> split);

  std::span<const double> sample(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  std::span<double> sample(std::size_t i) { return {values_.data() + i * dim_, dim_}; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * dim_ + j]; }

  void push_back(std::span<const double> x);
  void reserve(std::size_t n) { values_.reserve(n * dim_); }

  /// Coordinates [begin, begin + len) of every sample.
  SampleBatch columns(std::size_t begin, std::size_t len) const;
  /// Samples [begin, begin + len).
  SampleBatch rows(std::size_t begin, std::size_t len) const;
  Vector coordinate(std::size_t j) const;

  /// Joins two batches of equal count side by side.
  static SampleBatch hstack(const SampleBatch& a, const SampleBatch& b,
                            std::optional<BlockSplit> split = std::nullopt);

  const std::vector<double>& values() const noexcept { return values_; }
  bool all_finite() const;

  /// CSV with header dim_0,...,dim_{d-1}; 17 significant digits.
  void write_csv(const std::string& path) const;
  static SampleBatch read_csv(const std::string& path);

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::optional<BlockSplit> split_;
};

}  // namespace biflow
