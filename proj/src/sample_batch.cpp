#include "biflow/sample_batch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "biflow/error.hpp"
#include "biflow/io.hpp"

namespace biflow {

SampleBatch::SampleBatch(std::size_t dimension, std::optional<BlockSplit> split) : dim_(dimension) {
  require(dimension > 0, ErrorCode::InvalidArgument, "sample dimension must be positive");
  set_block_split(split);
}

SampleBatch::SampleBatch(std::size_t dimension, std::size_t count, std::vector<double> values,
                         std::optional<BlockSplit> split)
    : dim_(dimension), values_(std::move(values)) {
  require(dimension > 0, ErrorCode::InvalidArgument, "sample dimension must be positive");
  require(values_.size() == dimension * count, ErrorCode::DimensionMismatch,
          "value count does not match dimension * count");
  set_block_split(split);
}

void SampleBatch::set_block_split(std::optional<BlockSplit> split) {
  require(!split || split->total() == dim_, ErrorCode::DimensionMismatch,
          "block split does not add up to the dimension");
  split_ = split;
}

void SampleBatch::push_back(std::span<const double> x) {
  require(x.size() == dim_, ErrorCode::DimensionMismatch, "sample has wrong dimension");
  values_.insert(values_.end(), x.begin(), x.end());
}

SampleBatch SampleBatch::columns(std::size_t begin, std::size_t len) const {
  require(begin + len <= dim_, ErrorCode::DimensionMismatch, "column range out of bounds");
  SampleBatch out(len);
  out.reserve(count());
  for (std::size_t i = 0; i < count(); ++i) out.push_back(sample(i).subspan(begin, len));
  return out;
}

SampleBatch SampleBatch::rows(std::size_t begin, std::size_t len) const {
  require(begin + len <= count(), ErrorCode::DimensionMismatch, "row range out of bounds");
  std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(begin * dim_),
                        values_.begin() + static_cast<std::ptrdiff_t>((begin + len) * dim_));
  return SampleBatch(dim_, len, std::move(v), split_);
}

Vector SampleBatch::coordinate(std::size_t j) const {
  Vector c(count());
  for (std::size_t i = 0; i < count(); ++i) c[i] = (*this)(i, j);
  return c;
}

SampleBatch SampleBatch::hstack(const SampleBatch& a, const SampleBatch& b,
                                std::optional<BlockSplit> split) {
  require(a.count() == b.count(), ErrorCode::DimensionMismatch, "batches differ in count");
  SampleBatch out(a.dimension() + b.dimension());
  out.reserve(a.count());
  std::vector<double> row(out.dimension());
  for (std::size_t i = 0; i < a.count(); ++i) {
    std::copy(a.sample(i).begin(), a.sample(i).end(), row.begin());
    std::copy(b.sample(i).begin(), b.sample(i).end(),
              row.begin() + static_cast<std::ptrdiff_t>(a.dimension()));
    out.push_back(row);
  }
  out.set_block_split(split);
  return out;
}

bool SampleBatch::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void SampleBatch::write_csv(const std::string& path) const {
  std::string text;
  for (std::size_t j = 0; j < dim_; ++j) {
    if (j) text += ',';
    text += "dim_" + std::to_string(j);
  }
  text += '\n';
  for (std::size_t i = 0; i < count(); ++i) {
    text += join_doubles(sample(i));
    text += '\n';
  }
  write_text(path, text);
}

SampleBatch SampleBatch::read_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::TruncatedFile, "empty CSV " + path);
  const std::size_t dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  SampleBatch out(dim);
  std::vector<double> row;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    row.clear();
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    out.push_back(row);
  }
  return out;
}

}  // namespace biflow
