#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "krsketch/kernels.hpp"
#include "krsketch/random.hpp"

using krs::GaussianStream;
using krs::StreamTag;

TEST(StreamId, PacksTagAboveIndex) {
  EXPECT_EQ(krs::stream_id(StreamTag::Case1P, 0), std::uint64_t{1} << 48);
  EXPECT_EQ(krs::stream_id(StreamTag::DenseRow, 7), (std::uint64_t{5} << 48) | 7);
  EXPECT_NE(krs::stream_id(StreamTag::Case2P, 3), krs::stream_id(StreamTag::Case2Q, 3));
}

TEST(StreamId, TrialSeedIsMasterPlusTrial) {
  EXPECT_EQ(krs::trial_seed(100, 0), 100u);
  EXPECT_EQ(krs::trial_seed(100, 9), 109u);
}

TEST(GaussianStream, AtAgreesWithFillAtAnyOffset) {
  const GaussianStream g(11, StreamTag::TestVector, 4);
  const auto all = g.take(0, 41);
  for (std::uint64_t k = 0; k < all.size(); ++k) EXPECT_EQ(g.at(k), all[k]) << k;
  for (std::uint64_t first : {1u, 2u, 5u, 17u}) {
    const auto part = g.take(first, 13);
    for (std::size_t i = 0; i < part.size(); ++i) EXPECT_EQ(part[i], all[first + i]);
  }
}

TEST(GaussianStream, SameAddressSameValues) {
  const auto a = GaussianStream(5, StreamTag::Case1P).take(0, 100);
  const auto b = GaussianStream(5, StreamTag::Case1P).take(0, 100);
  EXPECT_EQ(a, b);
}

TEST(GaussianStream, SeedsAndStreamsAreDistinct) {
  const auto base = GaussianStream(5, StreamTag::Case1P).take(0, 64);
  const auto other_seed = GaussianStream(6, StreamTag::Case1P).take(0, 64);
  const auto other_tag = GaussianStream(5, StreamTag::Case1Q).take(0, 64);
  const auto other_idx = GaussianStream(5, StreamTag::Case1P, 1).take(0, 64);
  EXPECT_NE(base, other_seed);
  EXPECT_NE(base, other_tag);
  EXPECT_NE(base, other_idx);
}

TEST(GaussianStream, NeighbouringStreamsUncorrelated) {
  const std::size_t n = 200000;
  const auto a = GaussianStream(1, StreamTag::DenseRow, 0).take(0, n);
  const auto b = GaussianStream(1, StreamTag::DenseRow, 1).take(0, n);
  double c = 0;
  for (std::size_t i = 0; i < n; ++i) c += a[i] * b[i];
  EXPECT_LE(std::abs(c / n), 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(GaussianStream, MatrixIsRowMajorIndexed) {
  const GaussianStream g(3, StreamTag::TestVector, 9);
  const auto m = g.matrix_row_major_index(4, 3, 0.5);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_EQ(m(i, j), 0.5 * g.at(i * 3 + j));
}

TEST(GaussianStream, IndependentOfKernelTier) {
  if (!krs::simd::tier_supported(krs::simd::KernelTier::Avx2)) GTEST_SKIP() << "no AVX2";
  const GaussianStream g(77, StreamTag::ProblemNoise);
  std::vector<double> a, b;
  {
    krs::simd::ScopedTier t(krs::simd::KernelTier::Scalar);
    a = g.take(3, 1001);
  }
  {
    krs::simd::ScopedTier t(krs::simd::KernelTier::Avx2);
    b = g.take(3, 1001);
  }
  EXPECT_EQ(a, b);
}
