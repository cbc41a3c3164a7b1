#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "biflow/error.hpp"
#include "biflow/io.hpp"
#include "biflow/random.hpp"
#include "biflow/sample_batch.hpp"
#include "biflow/stats.hpp"
#include "test_support.hpp"

using namespace biflow;
using biflow::testing::TempDir;

TEST(Rng, SameSeedAndStreamReproduce) {
  Rng a(42, 3), b(42, 3), c(42, 4), d(43, 3);
  bool differs_stream = false, differs_seed = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs_stream |= x != c.next_u64();
    differs_seed |= x != d.next_u64();
  }
  EXPECT_TRUE(differs_stream);
  EXPECT_TRUE(differs_seed);
  EXPECT_EQ(Rng(9).split(2).next_u64(), Rng(9, 2).next_u64());
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(7);
  const int n = 200000;
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  // 5 standard errors
  EXPECT_NEAR(su / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sn / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sn2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(Rng, BelowAndShuffle) {
  Rng rng(11);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) ++hits[rng.below(7)];
  for (int h : hits) EXPECT_GT(h, 800);

  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  shuffle(v.begin(), v.end(), rng);
  EXPECT_EQ(std::set<int>(v.begin(), v.end()).size(), 50u);
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST(SampleBatch, LayoutAndSlicing) {
  SampleBatch b(3, BlockSplit{2, 1});
  b.push_back(Vector{1.0, 2.0, 3.0});
  b.push_back(Vector{4.0, 5.0, 6.0});
  EXPECT_EQ(b.count(), 2u);
  EXPECT_EQ(b(1, 2), 6.0);
  EXPECT_EQ(b.values(), (std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(b.coordinate(1), (Vector{2.0, 5.0}));
  EXPECT_EQ(b.columns(1, 2).values(), (std::vector<double>{2, 3, 5, 6}));
  EXPECT_EQ(b.rows(1, 1).values(), (std::vector<double>{4, 5, 6}));
  const SampleBatch h = SampleBatch::hstack(b.columns(0, 2), b.columns(2, 1), BlockSplit{2, 1});
  EXPECT_EQ(h.values(), b.values());
  EXPECT_THROW(b.push_back(Vector{1.0}), Error);
  EXPECT_THROW(b.set_block_split(BlockSplit{1, 1}), Error);
  EXPECT_THROW(SampleBatch(2, 2, {1.0, 2.0, 3.0}), Error);
}

TEST(SampleBatch, CsvRoundTripIsExact) {
  TempDir dir("csv");
  Rng rng(5);
  const SampleBatch b = standard_normal(rng, 50, 3);
  b.write_csv(dir / "b.csv");
  EXPECT_EQ(read_text(dir / "b.csv").substr(0, 18), "dim_0,dim_1,dim_2\n");
  const SampleBatch back = SampleBatch::read_csv(dir / "b.csv");
  EXPECT_EQ(back.values(), b.values());
  EXPECT_EQ(back.dimension(), 3u);
}

TEST(Io, FormatDoubleRoundTrips) {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(rng.normal(), static_cast<int>(rng.below(200)) - 100);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(join_doubles(Vector{1.0, 0.5}), "1,0.5");
}

TEST(Io, Sha256KnownVector) {
  TempDir dir("sha");
  write_text(dir / "abc", "abc");
  EXPECT_EQ(sha256_file(dir / "abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_THROW((void)read_file(dir / "missing"), Error);
}

TEST(Io, GzipIsDecodedTransparently) {
  const auto bytes = read_file(std::string(BIFLOW_TEST_DATA) + "/digits-images-idx3-ubyte.gz");
  ASSERT_GE(bytes.size(), 16u);
  EXPECT_EQ(bytes[2], 0x08);
  EXPECT_EQ(bytes[3], 0x03);
  EXPECT_EQ(bytes.size(), 16u + 10000u * 28u * 28u);
}

TEST(Stats, MomentsHandWorked) {
  const SampleBatch b(2, 3, {1.0, 0.0, 2.0, 2.0, 3.0, 4.0});
  const Moments m = empirical_moments(b);
  EXPECT_DOUBLE_EQ(m.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(m.mean[1], 2.0);
  // deviations (-1,-2), (0,0), (1,2) over N - 1 = 2
  EXPECT_DOUBLE_EQ(m.cov(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.cov(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(m.cov(1, 1), 4.0);
  EXPECT_THROW(empirical_moments(SampleBatch(2, 1, {1.0, 2.0})), Error);
}

TEST(Stats, NormalCdfValues) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_NEAR(normal_cdf(3.0, 1.0, 2.0), normal_cdf(1.0), 1e-16);
}

TEST(Stats, KsHandWorked) {
  auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  EXPECT_DOUBLE_EQ(ks_statistic(Vector{0.5}, uniform), 0.5);
  // ECDF steps at 0.1 and 0.2, both reached by 0.2; the gap 1 - 0.2 dominates.
  EXPECT_DOUBLE_EQ(ks_statistic(Vector{0.2, 0.1}, uniform), 0.8);
  Rng rng(8);
  Vector z(20000);
  for (double& v : z) v = rng.normal();
  EXPECT_LT(ks_statistic(z, [](double x) { return normal_cdf(x); }), 1.63 / std::sqrt(20000.0));
  EXPECT_GT(ks_statistic(z, [](double x) { return normal_cdf(x, 0.2); }), 0.05);
}

TEST(Stats, HistogramAndTotalVariation) {
  const Histogram h = histogram(Vector{0.1, 0.6, 0.7, 1.0, 2.0}, 2, 0.0, 1.0);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(h.in_range, 4u);
  EXPECT_EQ(h.total, 5u);
  // 0.5 (|0.2 - 0.5| + |0.6 - 0.5|) + 0.5 * 0.2 outside
  EXPECT_NEAR(total_variation(h, Vector{0.5, 0.5}), 0.3, 1e-15);
  // reference mass missing from the bins counts too
  EXPECT_NEAR(total_variation(histogram(Vector{0.2, 0.7}, 2, 0.0, 1.0), Vector{0.4, 0.4}), 0.2, 1e-15);
  EXPECT_THROW(histogram(Vector{0.0}, 0, 0.0, 1.0), Error);
}
