#include "octasim/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

using namespace octasim;

TEST(DeriveSeed, DeterministicAndDistinct) {
  EXPECT_EQ(derive_seed(42, std::uint64_t{3}), derive_seed(42, std::uint64_t{3}));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(7, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(2, std::uint64_t{0}));
}

TEST(DeriveSeed, LabelsSelectIndependentStreams) {
  EXPECT_EQ(derive_seed(9, "sinks"), derive_seed(9, "sinks"));
  EXPECT_NE(derive_seed(9, "sinks"), derive_seed(9, "roots"));
  EXPECT_NE(derive_seed(9, "sinks"), derive_seed(10, "sinks"));
}

TEST(Rng, SameSeedSameSequence) {
  Rng a(123);
  Rng b(123);
  for (int i = 0; i < 100; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
    ASSERT_EQ(a.normal(), b.normal());
    ASSERT_EQ(a.beta(2.0, 3.0), b.beta(2.0, 3.0));
  }
}

TEST(Rng, UniformRange) {
  Rng rng(5);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = rng.uniform_open0();
    ASSERT_GT(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(Rng, NormalMoments) {
  Rng rng(11);
  const int n = 200000;
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(2.0, 3.0);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 2.0, 0.03);
  EXPECT_NEAR(std::sqrt(var), 3.0, 0.03);
}

TEST(Rng, GammaMeanEqualsShape) {
  Rng rng(13);
  for (double shape : {0.3, 1.0, 4.5}) {
    const int n = 100000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rng.gamma(shape);
    EXPECT_NEAR(s / n, shape, 0.02 * std::max(1.0, shape)) << "shape " << shape;
  }
}

TEST(Rng, BetaMomentsAcrossShapes) {
  Rng rng(17);
  const std::vector<std::pair<double, double>> shapes{{0.5, 0.5}, {1, 1}, {2, 5}, {8, 0.5}, {100, 100}};
  for (const auto& [a, b] : shapes) {
    const int n = 200000;
    double s = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.beta(a, b);
      ASSERT_GE(x, 0.0);
      ASSERT_LE(x, 1.0);
      s += x;
      s2 += x * x;
    }
    const double mean = s / n;
    const double sd = std::sqrt(s2 / n - mean * mean);
    const double want_mean = a / (a + b);
    const double want_sd = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1)));
    EXPECT_NEAR(mean, want_mean, 0.005) << a << "," << b;
    EXPECT_NEAR(sd, want_sd, 0.03 * want_sd + 1e-3) << a << "," << b;
  }
}

TEST(Rng, TinyShapesStayFinite) {
  Rng rng(19);
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.beta(1e-3, 1e-3);
    ASSERT_TRUE(std::isfinite(x));
    ASSERT_GE(x, 0.0);
    ASSERT_LE(x, 1.0);
  }
}
