#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "walkgossip/rng.hpp"

namespace wg {
namespace {

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  RngStream a(7, "walk_moves", 3), b(7, "walk_moves", 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());

  std::set<std::uint64_t> seeds;
  for (std::uint64_t root : {0, 1, 2})
    for (const char* name : {"walk_moves", "gradients", "delays"})
      for (std::uint64_t k = 0; k < 50; ++k) seeds.insert(derive_seed(root, name, k));
  EXPECT_EQ(seeds.size(), 3u * 3u * 50u);
}

TEST(Rng, ExponentialMeanAndPositivity) {
  RngStream rng(11, "exp");
  const double mean = 2.5;
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.exponential(mean);
    ASSERT_GT(x, 0.0);
    sum += x;
  }
  EXPECT_NEAR(sum / n, mean, 0.02 * mean);
}

TEST(Rng, UniformRanges) {
  RngStream rng(3, "u");
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    const double w = rng.uniform_open();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_GT(w, 0.0);
    ASSERT_LT(w, 1.0);
    ASSERT_LT(rng.below(7), 7u);
  }
}

TEST(Rng, GammaMean) {
  RngStream rng(5, "gamma");
  for (double shape : {0.1, 1.0, 4.0}) {
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape);
      ASSERT_GE(g, 0.0);
      sum += g;
      sq += g * g;
    }
    const double m = sum / n;
    const double se = std::sqrt((sq / n - m * m) / n);
    EXPECT_NEAR(m, shape, 5 * se) << "shape " << shape;
  }
}

}  // namespace
}  // namespace wg
