// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "veda/eviction.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "support/oracles.hpp"
#include "veda/error.hpp"

namespace veda::eviction {
namespace {

using numcore::DenseVector;

EvictionConfig config(double ratio, std::size_t reserved, std::size_t heads = 1) {
  EvictionConfig c;
  c.ratio = ratio;
  c.reserved = reserved;
  c.num_heads = heads;
  return c;
}

std::vector<ScoreRow> random_rows(std::mt19937_64& gen, std::size_t heads, std::size_t len) {
  std::vector<ScoreRow> rows;
  for (std::size_t h = 0; h < heads; ++h) {
    rows.push_back({DenseVector(testing::random_distribution(gen, len, 0.3)), h});
  }
  return rows;
}

std::vector<ScoreRow> uniform_rows(std::size_t heads, std::size_t len) {
  std::vector<ScoreRow> rows;
  for (std::size_t h = 0; h < heads; ++h) rows.push_back({DenseVector::filled(len, 1.0 / len), h});
  return rows;
}

TEST(TargetSizeTest, Examples) {
  EXPECT_EQ(target_size(512, config(0.5, 32)), 256u);
  EXPECT_EQ(target_size(4096, config(0.1, 32)), 410u);
  EXPECT_EQ(target_size(10, config(0.1, 32)), 33u);
  auto c = config(0.1, 32);
  c.explicit_target = 100;
  EXPECT_EQ(target_size(4096, c), 100u);
  EXPECT_THROW(target_size(0, config(0.5, 32)), InvalidArgument);
}

TEST(EvictionConfigTest, Validation) {
  EXPECT_THROW(config(0.0, 32).validate(), InvalidArgument);
  EXPECT_THROW(config(1.5, 32).validate(), InvalidArgument);
  auto c = config(0.5, 32);
  c.explicit_target = 32;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_NO_THROW(config(1.0, 0).validate());
}

TEST(ThresholdTest, UniformRowIsAOverL) {
  for (std::size_t l : {1u, 4u, 100u}) {
    const std::vector<double> row(l, 1.0 / l);
    EXPECT_NEAR(adaptive_threshold(row, config(1.0, 0)), 1.0 / l, 1e-15);
  }
}

TEST(ThresholdTest, OneZeroRow) {
  const std::vector<double> row{1.0, 0.0};
  const auto m = testing::two_pass_moments(row);
  EXPECT_DOUBLE_EQ(static_cast<double>(m.mean), 0.5);
  EXPECT_DOUBLE_EQ(static_cast<double>(m.stddev), 0.5);
  EXPECT_NEAR(adaptive_threshold(row, config(1.0, 0)), 0.4, 1e-15);
}

TEST(ThresholdTest, StrictlyDecreasingInB) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto row = testing::random_distribution(gen, 2 + gen() % 50);
    auto c = config(1.0, 0);
    c.coeff_b = 0.0;
    double prev = adaptive_threshold(row, c);
    for (double b : {0.1, 0.2, 0.5, 1.0}) {
      c.coeff_b = b;
      const double t = adaptive_threshold(row, c);
      EXPECT_LT(t, prev);
      prev = t;
    }
  }
}

TEST(CastVotesTest, UniformScoresCastNothing) {
  KVCacheState s(0, 10);
  for (int i = 0; i < 5; ++i) s.admit_next();
  const auto inc = cast_votes(s, uniform_rows(3, 5), config(1.0, 0, 3));
  for (double x : inc) EXPECT_EQ(x, 0.0);
}

TEST(CastVotesTest, HeadAveraging) {
  KVCacheState s(0, 10);
  for (int i = 0; i < 3; ++i) s.admit_next();
  std::vector<ScoreRow> rows{{DenseVector{0.45, 0.45, 0.10}, 0}, {DenseVector{1.0 / 3, 1.0 / 3, 1.0 / 3}, 1}};
  const auto inc = cast_votes(s, rows, config(1.0, 0, 2));
  EXPECT_EQ(inc[0], 0.0);
  EXPECT_EQ(inc[2], 0.5);
  EXPECT_EQ(s.tally_of(3), 0.5);
}

TEST(CastVotesTest, NonPositiveThresholdVotesTheMinimum) {
  KVCacheState s(1, 10);
  for (int i = 0; i < 4; ++i) s.admit_next();
  auto c = config(1.0, 1);
  c.coeff_a = 0.0;
  c.coeff_b = 1.0;  // T = -std <= 0
  // Position 1 is reserved; among the rest, 0.05 appears twice.
  const auto inc = cast_votes(s, std::vector<ScoreRow>{{DenseVector{0.01, 0.05, 0.89, 0.05}, 0}}, c);
  EXPECT_EQ(inc, (std::vector<double>{0.0, 1.0, 0.0, 1.0}));
}

TEST(CastVotesTest, RowLengthMismatchThrows) {
  KVCacheState s(0, 10);
  s.admit_next();
  EXPECT_THROW(cast_votes(s, uniform_rows(1, 2), config(1.0, 0)), InvalidArgument);
  EXPECT_THROW(cast_votes(s, uniform_rows(2, 1), config(1.0, 0, 1)), InvalidArgument);
}

TEST(CastVotesTest, MatchesBruteForceIndicatorOracle) {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t heads = 1 + gen() % 8;
    const std::size_t len = 1 + gen() % 80;
    const std::size_t reserved = gen() % 10;
    auto c = config(1.0, reserved, heads);
    c.coeff_b = std::uniform_real_distribution<double>(0.0, 2.0)(gen);
    KVCacheState s(reserved, 1000);
    for (std::size_t i = 0; i < len; ++i) s.admit_next();
    const auto rows = random_rows(gen, heads, len);
    const auto inc = cast_votes(s, rows, c);
    std::vector<double> expect(len, 0.0);
    for (const auto& r : rows) {
      const auto ind = testing::vote_oracle(r.scores.values(), std::min(reserved, len), c.coeff_a, c.coeff_b);
      for (std::size_t i = 0; i < len; ++i) expect[i] += ind[i];
    }
    for (std::size_t i = 0; i < len; ++i) {
      ASSERT_NEAR(inc[i], expect[i] / heads, 1e-12);
      ASSERT_GE(inc[i], 0.0);
      ASSERT_LE(inc[i], 1.0);
    }
  }
}

KVCacheState state_with(std::size_t reserved, const std::vector<Position>& evict, std::size_t n) {
  KVCacheState s(reserved, 100);
  for (std::size_t i = 0; i < n; ++i) s.admit_next();
  for (Position p : evict) s.evict_at(*s.index_of(p));
  return s;
}

TEST(SelectEvictionTest, TieGoesToEarliest) {
  auto s = state_with(2, {4, 6}, 7);  // live 1 2 | 3 5 7
  s.add_tally(*s.index_of(3), 2.0);
  s.add_tally(*s.index_of(5), 2.0);
  s.add_tally(*s.index_of(7), 1.0);
  EXPECT_EQ(select_eviction(s), 3u);
}

TEST(SelectEvictionTest, AllZeroPicksEarliestEligible) {
  const auto s = state_with(2, {3}, 6);
  EXPECT_EQ(select_eviction(s), 4u);
}

TEST(SelectEvictionTest, NoEligibleThrows) {
  const auto s = state_with(4, {}, 3);
  EXPECT_THROW(select_eviction(s), InvalidState);
  EXPECT_THROW(select_min_accumulated(s), InvalidState);
}

TEST(SelectEvictionTest, MatchesLinearScanOracle) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + gen() % 60;
    const std::size_t reserved = gen() % (n - 1);
    KVCacheState s(reserved, 1000);
    for (std::size_t i = 0; i < n; ++i) s.admit_next();
    std::vector<double> tallies(n, 0.0);
    for (std::size_t i = reserved; i < n; ++i) {
      // Coarse values make ties common.
      tallies[i] = static_cast<double>(gen() % 5) * 0.25;
      s.add_tally(i, tallies[i]);
    }
    ASSERT_EQ(select_eviction(s), testing::first_argmax(tallies, reserved) + 1);
    ASSERT_EQ(select_min_accumulated(s), testing::first_argmin(tallies, reserved) + 1);
  }
}

TEST(PrefillTest, ReservedStageCastsNoVotes) {
  const auto c = config(0.5, 32, 2);
  auto s = make_state(64, c);
  std::mt19937_64 gen(1);
  for (std::size_t t = 1; t <= 32; ++t) prefill_step(s, random_rows(gen, 2, t), t, c);
  for (double v : s.tallies()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(s.phase(), Phase::kPrefillReserved);
  // Step 33 is the first voter; only position 33 is eligible, and with a
  // sparse row it may or may not be voted.
  prefill_step(s, random_rows(gen, 2, 33), 33, c);
  EXPECT_EQ(s.phase(), Phase::kPrefillVoting);
  for (std::size_t t = 34; t <= 64; ++t) prefill_step(s, random_rows(gen, 2, t), t, c);
  EXPECT_EQ(s.size(), 64u);
  double total = 0.0;
  for (double v : s.tallies()) total += v;
  EXPECT_GT(total, 0.0);
}

TEST(PrefillTest, WrongPhaseOrStepThrows) {
  const auto c = config(0.5, 0);
  auto s = make_state(4, c);
  EXPECT_THROW(prefill_step(s, uniform_rows(1, 1), 2, c), InvalidArgument);
  prefill_step(s, uniform_rows(1, 1), 1, c);
  transition_to_generation(s, c);
  EXPECT_THROW(prefill_step(s, uniform_rows(1, 2), 2, c), InvalidState);
  EXPECT_THROW(transition_to_generation(s, c), InvalidState);
  auto fresh = make_state(4, c);
  EXPECT_THROW(generation_step(fresh, uniform_rows(1, 1), c), InvalidState);
}

TEST(TransitionTest, ShrinksToTargetKeepingReserved) {
  const auto c = config(0.5, 32, 1);
  auto s = make_state(512, c);
  std::mt19937_64 gen(2);
  for (std::size_t t = 1; t <= 512; ++t) prefill_step(s, random_rows(gen, 1, t), t, c);
  const auto evicted = transition_to_generation(s, c);
  EXPECT_EQ(evicted.size(), 256u);
  EXPECT_EQ(s.size(), 256u);
  for (Position p = 1; p <= 32; ++p) EXPECT_TRUE(s.index_of(p).has_value());
  EXPECT_EQ(s.phase(), Phase::kGeneration);
}

TEST(TransitionTest, NoEvictionWhenPromptFits) {
  auto c = config(1.0, 4);
  c.explicit_target = 50;
  auto s = make_state(20, c);
  for (std::size_t t = 1; t <= 20; ++t) prefill_step(s, uniform_rows(1, t), t, c);
  EXPECT_TRUE(transition_to_generation(s, c).empty());
  EXPECT_EQ(s.size(), 20u);
}

TEST(GenerationTest, EvictedTallyIsDiscarded) {
  auto c = config(1.0, 0);
  c.explicit_target = 2;
  auto s = make_state(2, c);
  prefill_step(s, uniform_rows(1, 1), 1, c);
  prefill_step(s, std::vector<ScoreRow>{{DenseVector{0.9, 0.1}, 0}}, 2, c);
  EXPECT_EQ(s.tally_of(2), 1.0);
  transition_to_generation(s, c);
  const auto victim = generation_step(s, std::vector<ScoreRow>{{DenseVector{0.1, 0.1, 0.8}, 0}}, c);
  ASSERT_TRUE(victim.has_value());
  EXPECT_EQ(*victim, 2u);  // 2 votes vs 1 for position 1
  EXPECT_FALSE(s.index_of(2).has_value());
  EXPECT_EQ(s.tally_of(2), 0.0);
  EXPECT_EQ(s.size(), 2u);
}

// Causal uniform rows: row t spreads 1/t over positions 1..t. Column sums
// favour early positions, so accumulation drops the newest token while
// voting (no position is below the uniform mean) drops the earliest.
TEST(AccumulationBiasTest, AccumulationEvictsNewestVotingDoesNot) {
  auto c = config(1.0, 0);
  c.explicit_target = 5;
  auto h2o = make_state(6, c);
  auto vote = make_state(6, c);
  for (std::size_t t = 1; t <= 6; ++t) {
    h2o_prefill_step(h2o, uniform_rows(1, t), t, c);
    prefill_step(vote, uniform_rows(1, t), t, c);
  }
  EXPECT_EQ(h2o_transition(h2o, c), (std::vector<Position>{6}));
  EXPECT_EQ(transition_to_generation(vote, c), (std::vector<Position>{1}));
}

TEST(H2OTest, MatchesColumnSumOracle) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t heads = 1 + gen() % 4;
    const std::size_t reserved = gen() % 6;
    const std::size_t prompt = reserved + 2 + gen() % 30;
    auto c = config(1.0, reserved, heads);
    c.explicit_target = reserved + 1 + gen() % (prompt - reserved);
    auto s = make_state(prompt, c);
    // Oracle: map position -> accumulated sum, live list.
    std::vector<Position> live;
    std::vector<double> sums(prompt + 40, 0.0);
    auto oracle_add = [&](const std::vector<ScoreRow>& rows) {
      for (const auto& r : rows) {
        for (std::size_t i = std::min(reserved, live.size()); i < live.size(); ++i) sums[live[i]] += r.scores[i];
      }
    };
    auto oracle_evict = [&]() {
      std::vector<double> v;
      for (Position p : live) v.push_back(sums[p]);
      const std::size_t idx = testing::first_argmin(v, std::min(reserved, live.size()));
      const Position p = live[idx];
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(idx));
      return p;
    };
    for (std::size_t t = 1; t <= prompt; ++t) {
      live.push_back(static_cast<Position>(t));
      const auto rows = random_rows(gen, heads, live.size());
      oracle_add(rows);
      h2o_prefill_step(s, rows, t, c);
    }
    std::vector<Position> expect;
    while (live.size() > *c.explicit_target) expect.push_back(oracle_evict());
    ASSERT_EQ(h2o_transition(s, c), expect);
    for (std::size_t g = 0; g < 30; ++g) {
      live.push_back(static_cast<Position>(prompt + g + 1));
      const auto rows = random_rows(gen, heads, live.size());
      oracle_add(rows);
      const auto got = h2o_step(s, rows, c);
      ASSERT_TRUE(got.has_value());
      ASSERT_EQ(*got, oracle_evict());
      ASSERT_EQ(s.live_positions(), live);
    }
  }
}

TEST(SlidingWindowTest, KeepsSinksAndRecent) {
  auto c = config(1.0, 2);
  c.explicit_target = 4;
  auto s = make_state(6, c);
  for (std::size_t t = 1; t <= 6; ++t) sliding_window_prefill_step(s, t);
  sliding_window_transition(s);
  EXPECT_EQ(s.live_positions(), (std::vector<Position>{1, 2, 5, 6}));
}

TEST(SlidingWindowTest, MatchesSetOracle) {
  for (std::size_t reserved = 0; reserved <= 5; ++reserved) {
    for (std::size_t target = reserved + 1; target <= reserved + 8; ++target) {
      auto c = config(1.0, reserved);
      c.explicit_target = target;
      const std::size_t prompt = target + 3;
      auto s = make_state(prompt, c);
      for (std::size_t t = 1; t <= prompt; ++t) sliding_window_prefill_step(s, t);
      sliding_window_transition(s);
      for (std::size_t t = prompt + 1; t <= prompt + 20; ++t) {
        const auto victim = sliding_window_step(s, c);
        ASSERT_TRUE(victim.has_value());
        ASSERT_GT(*victim, reserved);
        const auto expect = testing::window_oracle(t, reserved, target);
        ASSERT_EQ(std::set<Position>(s.live_positions().begin(), s.live_positions().end()), expect);
      }
    }
  }
}

TEST(GenerationAttentionLengthTest, Examples) {
  EXPECT_EQ(generation_attention_length(512, 1, std::nullopt), 513u);
  EXPECT_EQ(generation_attention_length(512, 1000, std::nullopt), 1512u);
  EXPECT_EQ(generation_attention_length(512, 1, 256), 257u);
  EXPECT_EQ(generation_attention_length(512, 1000, 256), 257u);
  EXPECT_EQ(generation_attention_length(10, 3, 100), 13u);
}

// Random-trace invariants for the voting policy: reserved positions survive,
// the cache never exceeds its target after a generation step, per-step
// increments stay in [0, 1], and a replay reproduces the eviction sequence.
TEST(VotingPropertyTest, InvariantsOverRandomTraces) {
  std::mt19937_64 seeds(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::uint64_t seed = seeds();
    auto run = [&](std::vector<Position>& evictions) {
      std::mt19937_64 gen(seed);
      const std::size_t heads = 1 + gen() % 4;
      const std::size_t reserved = gen() % 8;
      const std::size_t prompt = reserved + 1 + gen() % 60;
      const double ratio = std::uniform_real_distribution<double>(0.05, 1.0)(gen);
      auto c = config(ratio, reserved, heads);
      auto s = make_state(prompt, c);
      for (std::size_t t = 1; t <= prompt; ++t) {
        const auto rows = random_rows(gen, heads, t);
        KVCacheState before = s;
        prefill_step(s, rows, t, c);
        for (std::size_t i = 0; i < s.size(); ++i) {
          const double delta = s.tallies()[i] - (i < before.size() ? before.tallies()[i] : 0.0);
          ASSERT_GE(delta, 0.0);
          ASSERT_LE(delta, 1.0 + 1e-12);
        }
      }
      for (Position p : transition_to_generation(s, c)) evictions.push_back(p);
      for (std::size_t g = 0; g < 80; ++g) {
        const auto rows = random_rows(gen, heads, s.size() + 1);
        if (auto v = generation_step(s, rows, c)) evictions.push_back(*v);
        ASSERT_LE(s.size(), std::max(s.target(), std::min(reserved, s.steps())));
        for (Position p = 1; p <= std::min<std::size_t>(reserved, s.steps()); ++p) ASSERT_TRUE(s.index_of(p));
        ASSERT_TRUE(std::is_sorted(s.live_positions().begin(), s.live_positions().end()));
      }
      for (Position p : evictions) ASSERT_GT(p, reserved);
    };
    std::vector<Position> first, second;
    run(first);
    run(second);
    ASSERT_EQ(first, second);
  }
}

}  // namespace
}  // namespace veda::eviction
