// SPDX-License-Identifier: Apache-2.0
#include "bridgelaw/random_stream.hpp"

#include <gtest/gtest.h>

#include <vector>

#include "bridgelaw/stats.hpp"

using namespace bridgelaw;

TEST(Philox, KnownAnswerVectors) {
  // Random123 kat_vectors for philox4x32_10.
  EXPECT_EQ(Philox4x32::apply({0, 0, 0, 0}, {0, 0}),
            (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::apply({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                              {0xffffffffu, 0xffffffffu}),
            (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::apply({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              {0xa4093822u, 0x299f31d0u}),
            (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RandomStream, SameKeyReproducesSequence) {
  auto a = make_stream(42, 7);
  auto b = make_stream(42, 7);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a(), b());
    ASSERT_EQ(a.normal(), b.normal());
  }
  EXPECT_EQ(a.counter(), b.counter());
}

TEST(RandomStream, DistinctStreamsLookIndependent) {
  auto a = make_stream(42, 0);
  auto b = make_stream(42, 1);
  std::vector<double> ua, ub;
  for (int i = 0; i < 10000; ++i) {
    ua.push_back(a.uniform());
    ub.push_back(b.uniform());
  }
  EXPECT_NE(ua.front(), ub.front());
  const auto ks = stats::ks_two_sample(stats::EmpiricalSample(ua), stats::EmpiricalSample(ub));
  EXPECT_GT(ks.p_value, 1e-3);
  const auto ind = stats::rank_independence(ua, ub);
  EXPECT_GT(ind.spearman_p, 1e-3);
}

TEST(RandomStream, UniformStaysInOpenInterval) {
  auto s = make_stream(3, 3);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RandomStream, GaussianMeanWithinThreeSigmaBound) {
  auto s = make_stream(42, 0);
  stats::MeanAccumulator acc;
  for (int i = 0; i < 1000000; ++i) acc.add(s.normal());
  EXPECT_LE(std::abs(acc.mean()), 0.004);
  EXPECT_NEAR(acc.variance(), 1.0, 0.005);
}

TEST(RandomStream, SignIsFair) {
  auto s = make_stream(11, 2);
  int plus = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) plus += s.sign() > 0;
  EXPECT_NEAR(plus / double(n), 0.5, 3 * 0.5 / std::sqrt(double(n)));
}

TEST(DeriveSeed, TagsSeparateFamilies) {
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
  EXPECT_EQ(derive_seed(5, "thm1"), derive_seed(5, "thm1"));
}
