#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gaussperc/rng.hpp"

using namespace gaussperc;

// Known-answer vectors of the reference Philox4x32-10 implementation.
TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (Philox4x32::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, SameStateSameSequence) {
  Philox4x32 a({42, 7}), b({42, 7});
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
}

TEST(Philox, StreamsDiffer) {
  Philox4x32 a({42, stream_id(StreamTag::field, 0)}), b({42, stream_id(StreamTag::field, 1)});
  int equal = 0;
  for (int i = 0; i < 64; ++i) equal += a() == b();
  EXPECT_LT(equal, 2);
}

TEST(Philox, PositionSkipsAhead) {
  Philox4x32 a({3, 9});
  for (int i = 0; i < 8; ++i) a();
  Philox4x32 b({3, 9}, 2);  // position counts 4-word blocks
  for (int i = 0; i < 8; ++i) ASSERT_EQ(a(), b());
}

TEST(Philox, UniformMoments) {
  Philox4x32 g({1, 1});
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = g.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 0.5, 5 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(var, 1.0 / 12.0, 0.002);
}

TEST(Philox, NormalMoments) {
  Philox4x32 g({2, 5});
  const int n = 200000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = g.normal();
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 5 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 5 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 5 * std::sqrt(96.0 / n));
}

TEST(Philox, UniformAtIsOrderFree) {
  const RngState st{11, stream_id(StreamTag::sites, 3)};
  std::vector<double> forward, backward;
  for (std::uint64_t c = 0; c < 50; ++c) forward.push_back(uniform_at(st, c));
  for (std::uint64_t c = 50; c-- > 0;) backward.push_back(uniform_at(st, c));
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(forward[i], backward[49 - i]);
}

TEST(Philox, StreamIdLayout) {
  EXPECT_EQ(stream_id(StreamTag::field, 0), std::uint64_t{1} << 56);
  EXPECT_EQ(stream_id(StreamTag::bernoulli, 5), (std::uint64_t{2} << 56) ^ 5u);
}
