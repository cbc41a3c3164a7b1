#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>

#include <unistd.h>

#include "biflow/linalg.hpp"
#include "biflow/monotone_map.hpp"
#include "biflow/random.hpp"

namespace biflow::testing {

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return max_abs_diff(a.data(), b.data()); }

// Random coefficients that keep every component a bijection of the real
// line: h gets no odd powers of the last variable and a nonnegative pure
// quadratic term, so softplus(h) stays bounded away from zero on both tails.
inline void perturb_bijective(MonotoneTriangularMap& map, Rng& rng, double scale) {
  for (std::size_t i = 0; i < map.dimension(); ++i) {
    MonotoneComponent& c = map.component(i);
    const std::size_t k = c.input_dim();
    Vector nonmono = c.coeffs_nonmonotone(), mono = c.coeffs_monotone();
    for (double& v : nonmono) v += scale * rng.normal();
    for (std::size_t j = 0; j < mono.size(); ++j) {
      const auto idx = c.basis()[j];
      std::uint32_t lead = 0;
      for (std::size_t q = 0; q + 1 < k; ++q) lead += idx[q];
      if (idx[k - 1] == 0) mono[j] += scale * rng.normal();
      else if (idx[k - 1] == 2 && lead == 0) mono[j] += 0.5 * scale * std::abs(rng.normal());
    }
    Vector p = nonmono;
    p.insert(p.end(), mono.begin(), mono.end());
    c.set_parameters(p);
  }
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("biflow-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string operator/(const std::string& name) const { return (path_ / name).string(); }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace biflow::testing
