// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "veda/numcore.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "support/oracles.hpp"
#include "veda/error.hpp"

namespace veda::numcore {
namespace {

std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

TEST(DenseVectorTest, RejectsNonFinite) {
  EXPECT_THROW(DenseVector({1.0, std::numeric_limits<double>::infinity()}), InvalidArgument);
  EXPECT_THROW(DenseVector({std::nan("")}), InvalidArgument);
}

TEST(DenseMatrixTest, ShapeMustMatchElementCount) {
  EXPECT_THROW(DenseMatrix(2, 3, std::vector<double>(5, 0.0)), InvalidArgument);
  const auto id = DenseMatrix::identity(3);
  EXPECT_EQ(id.at(1, 1), 1.0);
  EXPECT_EQ(id.at(1, 2), 0.0);
}

TEST(SoftmaxReferenceTest, SymmetricPair) {
  const auto p = softmax_reference(DenseVector{0.0, 0.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(SoftmaxReferenceTest, SingleElementIsOne) {
  for (double x : {-1e6, -3.0, 0.0, 42.0, 1e6}) EXPECT_DOUBLE_EQ(softmax_reference(DenseVector{x})[0], 1.0);
}

TEST(SoftmaxReferenceTest, MatchesHighPrecisionOracle) {
  const auto p = softmax_reference(DenseVector{1.0, 2.0, 3.0});
  const auto o = testing::softmax_oracle({1.0, 2.0, 3.0});
  // e^{-2}, e^{-1}, 1 over their sum.
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], static_cast<double>(o[i]), 1e-15);
  EXPECT_NEAR(p[0], 0.09003057317038046, 1e-15);
  EXPECT_NEAR(p[2], 0.6652409557748219, 1e-15);
}

TEST(SoftmaxReferenceTest, EmptyInputThrows) { EXPECT_THROW(softmax_reference(DenseVector{}), InvalidArgument); }

TEST(SoftmaxReferenceTest, ShiftInvarianceProperty) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto v = random_vector(gen, 1 + gen() % 64, -20.0, 20.0);
    const double c = std::uniform_real_distribution<double>(-100.0, 100.0)(gen);
    auto shifted = v;
    for (auto& x : shifted) x += c;
    const auto a = softmax_reference(DenseVector(v));
    const auto b = softmax_reference(DenseVector(shifted));
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-9);
      EXPECT_GT(a[i], 0.0);
      sum += a[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(CausalMaskTest, MaskedTailGetsZeroProbability) {
  const auto p = softmax_reference(causal_mask_row(DenseVector{1.0, 1.0, 1.0}, 2));
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  EXPECT_EQ(p[2], 0.0);
}

TEST(CausalMaskTest, FullLengthIsIdentity) {
  const DenseVector row{0.3, -1.0, 2.0};
  const auto m = causal_mask_row(row, 3);
  EXPECT_EQ(m.values.values(), row.values());
  for (bool b : m.masked) EXPECT_FALSE(b);
}

TEST(CausalMaskTest, SingleSurvivor) {
  const auto p = softmax_reference(causal_mask_row(DenseVector{5.0, 0.0, 0.0}, 1));
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_EQ(p[2], 0.0);
}

TEST(CausalMaskTest, OutOfRangeThrows) {
  EXPECT_THROW(causal_mask_row(DenseVector{1.0, 2.0}, 0), InvalidArgument);
  EXPECT_THROW(causal_mask_row(DenseVector{1.0, 2.0}, 3), InvalidArgument);
}

TEST(LayerNormTest, ConstantVectorGivesZeros) {
  const auto out = layernorm_reference(DenseVector::filled(5, 3.0), DenseVector::filled(5, 1.0), DenseVector::zeros(5));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(out[i], 0.0);
}

TEST(LayerNormTest, UnitVarianceInputIsUnchanged) {
  const auto out = layernorm_reference(DenseVector{-1.0, 1.0}, DenseVector{1.0, 1.0}, DenseVector{0.0, 0.0}, 1e-12);
  EXPECT_NEAR(out[0], -1.0, 1e-9);
  EXPECT_NEAR(out[1], 1.0, 1e-9);
}

TEST(LayerNormTest, LengthMismatchThrows) {
  EXPECT_THROW(layernorm_reference(DenseVector{1.0, 2.0}, DenseVector{1.0}, DenseVector{0.0, 0.0}), InvalidArgument);
  EXPECT_THROW(layernorm_reference(DenseVector{1.0}, DenseVector{1.0}, DenseVector{0.0}, 0.0), InvalidArgument);
}

TEST(LayerNormTest, MatchesTwoPassOracle) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 200;
    const auto v = random_vector(gen, n, -4.0, 4.0);
    const auto g = random_vector(gen, n, 0.5, 2.0);
    const auto b = random_vector(gen, n, -1.0, 1.0);
    const auto out = layernorm_reference(DenseVector(v), DenseVector(g), DenseVector(b));
    const auto m = testing::two_pass_moments(v);
    for (std::size_t i = 0; i < n; ++i) {
      const long double expect = g[i] * (v[i] - m.mean) / std::sqrt(m.stddev * m.stddev + 1e-5L) + b[i];
      EXPECT_NEAR(out[i], static_cast<double>(expect), 1e-5 * std::max(1.0L, std::fabs(expect)));
    }
  }
}

TEST(LayerNormTest, NormalizedOutputHasZeroMeanUnitVariance) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 8 + gen() % 100;
    const auto v = random_vector(gen, n, -10.0, 10.0);
    const auto out = layernorm_reference(DenseVector(v), DenseVector::filled(n, 1.0), DenseVector::zeros(n));
    const auto m = testing::two_pass_moments(out.values());
    EXPECT_NEAR(static_cast<double>(m.mean), 0.0, 1e-4);
    EXPECT_NEAR(static_cast<double>(m.stddev * m.stddev), 1.0, 1e-4);
  }
}

TEST(StreamingSoftmaxTest, FreshStatsSingleZero) {
  const auto s = streaming_softmax_update(SoftmaxStats{}, 0.0);
  EXPECT_EQ(s.running_max, 0.0);
  EXPECT_EQ(s.running_exp_sum, 1.0);
  EXPECT_EQ(s.count, 1u);
}

TEST(StreamingSoftmaxTest, UniformTileContributesCount) {
  const std::vector<double> tile(7, 2.5);
  const auto s = streaming_softmax_update(SoftmaxStats{}, tile);
  EXPECT_EQ(s.running_exp_sum, 7.0);
  EXPECT_EQ(s.count, 7u);
}

TEST(StreamingSoftmaxTest, EveryTilingOfOneTwoThreeMatchesSinglePass) {
  const std::vector<double> v{1.0, 2.0, 3.0};
  const long double expect = std::exp(-2.0L) + std::exp(-1.0L) + 1.0L;
  // Cut points between elements: 4 tilings.
  for (int mask = 0; mask < 4; ++mask) {
    SoftmaxStats s;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= 3; ++i) {
      if (i == 3 || (mask >> (i - 1)) & 1) {
        s = streaming_softmax_update(s, std::span<const double>(v.data() + start, i - start));
        start = i;
      }
    }
    EXPECT_EQ(s.running_max, 3.0);
    EXPECT_NEAR(s.running_exp_sum, static_cast<double>(expect), 1e-9 * static_cast<double>(expect));
  }
}

TEST(StreamingSoftmaxTest, TilingInvarianceProperty) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = random_vector(gen, 1 + gen() % 300, -30.0, 30.0);
    const auto whole = streaming_softmax_update(SoftmaxStats{}, v);
    SoftmaxStats tiled;
    std::size_t i = 0;
    while (i < v.size()) {
      const std::size_t len = std::min<std::size_t>(v.size() - i, 1 + gen() % 17);
      tiled = streaming_softmax_update(tiled, std::span<const double>(v.data() + i, len));
      i += len;
    }
    EXPECT_EQ(tiled.running_max, whole.running_max);
    EXPECT_NEAR(tiled.running_exp_sum, whole.running_exp_sum, 1e-9 * whole.running_exp_sum);
    EXPECT_EQ(tiled.count, whole.count);
    EXPECT_GE(tiled.running_exp_sum, 1.0);
  }
}

TEST(StreamingSoftmaxTest, NormalizeHalfOnTwoZeros) {
  const auto s = streaming_softmax_update(SoftmaxStats{}, std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(streaming_softmax_normalize(s, 0.0), 0.5);
}

TEST(StreamingSoftmaxTest, NormalizeZeroSumThrows) {
  EXPECT_THROW(streaming_softmax_normalize(SoftmaxStats{}, 0.0), NumericDomainError);
}

TEST(StreamingSoftmaxTest, NormalizeMatchesReference) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = random_vector(gen, 1 + gen() % 128, -15.0, 15.0);
    SoftmaxStats s;
    for (double x : v) s = streaming_softmax_update(s, x);
    const auto ref = softmax_reference(DenseVector(v));
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double p = streaming_softmax_normalize(s, v[i]);
      EXPECT_NEAR(p, ref[i], 1e-6);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(StreamingMomentsTest, ConstantStream) {
  MomentStats s;
  for (int i = 0; i < 3; ++i) s = streaming_moments_update(s, 4.25);
  const auto m = streaming_moments_finalize(s);
  EXPECT_EQ(m.mean, 4.25);
  EXPECT_EQ(m.stddev, 0.0);
}

TEST(StreamingMomentsTest, ZeroTwo) {
  const auto m = streaming_moments_finalize(streaming_moments_update(MomentStats{}, std::vector<double>{0.0, 2.0}));
  EXPECT_EQ(m.mean, 1.0);
  EXPECT_EQ(m.stddev, 1.0);
}

TEST(StreamingMomentsTest, EmptyFinalizeThrows) {
  EXPECT_THROW(streaming_moments_finalize(MomentStats{}), InvalidState);
}

TEST(StreamingMomentsTest, MatchesTwoPassOnUnitInterval) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 300; ++trial) {
    const auto v = random_vector(gen, 1 + gen() % 500, 0.0, 1.0);
    MomentStats s;
    for (double x : v) s = streaming_moments_update(s, x);
    const auto m = streaming_moments_finalize(s);
    const auto o = testing::two_pass_moments(v);
    EXPECT_NEAR(m.mean, static_cast<double>(o.mean), 1e-5);
    EXPECT_NEAR(m.stddev, static_cast<double>(o.stddev), 1e-5);
  }
}

}  // namespace
}  // namespace veda::numcore
