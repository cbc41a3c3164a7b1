#pragma once

#include <array>
#include <cstdint>

namespace biflow {

/// xoshiro256++ seeded through splitmix64 from (seed, stream_id).
/// Sequences depend only on the pair, so they are identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal by Box-Muller; the second variate of each pair is cached.
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Independent generator for a sub-stage, derived from this one's seed.
  Rng split(std::uint64_t stream_id) const { return Rng(seed_, stream_id); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_;
  std::uint64_t stream_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Fisher-Yates shuffle of an index range driven by rng.
template <class It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace biflow
