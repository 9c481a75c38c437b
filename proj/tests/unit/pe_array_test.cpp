// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <utility>

#include "veda/cyclesim.hpp"
#include "veda/error.hpp"

namespace veda::cyclesim {
namespace {

using dataflow::fixed_tree_schedule;
using dataflow::make_schedule;

PEArrayModel veda_array(Interpretation mode) {
  PEArrayModel a;
  a.mode = mode;
  return a;
}

std::size_t count(const std::vector<PEControl>& cmds, PEControl c) {
  return static_cast<std::size_t>(std::count(cmds.begin(), cmds.end(), c));
}

TEST(PEArrayModelTest, Geometry) {
  const PEArrayModel a;
  EXPECT_EQ(a.lanes(), 128u);
  EXPECT_EQ(a.global_rows(), 16u);
  EXPECT_EQ(a.kind(0), PEKind::kTypeA);
  EXPECT_EQ(a.kind(1), PEKind::kTypeB);
  EXPECT_EQ(a.lane(3, 5), 29u);
  EXPECT_EQ(inner_root_lane(a), a.lane(7, 7));
  PEArrayModel bad;
  bad.cols = 6;
  EXPECT_THROW(bad.validate(), InvalidConfiguration);
  bad = PEArrayModel{};
  bad.rows = 3;
  EXPECT_THROW(bad.validate(), InvalidConfiguration);
}

TEST(PEArrayModelTest, ControlEncoding) {
  EXPECT_EQ(static_cast<int>(PEControl::kAccumulateLocal), 0b00);
  EXPECT_EQ(static_cast<int>(PEControl::kTransmitPartial), 0b01);
  EXPECT_EQ(static_cast<int>(PEControl::kClearRegister), 0b10);
  EXPECT_EQ(static_cast<int>(PEControl::kDisable), 0b11);
  EXPECT_EQ(to_string(PEControl::kDisable), "disable");
}

// 4x4 single-bank array with the reduction graph written out by hand.
//   L1 per row: cols {0,1} -> col 0, cols {2,3} -> col 2, cols {0..3} -> col 1
//   L2 in col 3: rows {0,1} -> row 0, rows {2,3} -> row 2, rows {0..3} -> row 1
struct Node {
  std::uint32_t host_row, host_col;
  std::uint32_t first_lane;  // lowest lane index feeding the node
};

std::vector<Node> toy_nodes() {
  std::vector<Node> nodes;
  for (std::uint32_t r = 0; r < 4; ++r) {
    nodes.push_back({r, 0, r * 4 + 0});
    nodes.push_back({r, 2, r * 4 + 2});
    nodes.push_back({r, 1, r * 4 + 0});
  }
  nodes.push_back({0, 3, 0});
  nodes.push_back({2, 3, 8});
  nodes.push_back({1, 3, 0});
  return nodes;
}

TEST(PECommandTest, InnerMatchesHandWrittenGraph) {
  PEArrayModel a;
  a.rows = 4;
  a.cols = 4;
  a.banks = 1;
  a.mode = Interpretation::kInner;
  EXPECT_EQ(inner_root_lane(a), 7u);  // (1, 3)
  for (std::uint32_t used = 1; used <= 16; ++used) {
    for (bool first : {true, false}) {
      std::vector<PEControl> expect(16, PEControl::kDisable);
      for (std::uint32_t l = 0; l < used; ++l) expect[l] = PEControl::kTransmitPartial;
      for (const auto& n : toy_nodes()) {
        if (n.first_lane < used) expect[n.host_row * 4 + n.host_col] = PEControl::kTransmitPartial;
      }
      expect[7] = first ? PEControl::kClearRegister : PEControl::kAccumulateLocal;
      ASSERT_EQ(pe_commands(a, Interpretation::kInner, used, first), expect) << used;
    }
  }
}

TEST(PECommandTest, OuterClearsThenAccumulates) {
  const auto a = veda_array(Interpretation::kOuter);
  const auto first = pe_commands(a, Interpretation::kOuter, 100, true);
  EXPECT_EQ(count(first, PEControl::kClearRegister), 100u);
  EXPECT_EQ(count(first, PEControl::kDisable), 28u);
  const auto later = pe_commands(a, Interpretation::kOuter, 100, false);
  EXPECT_EQ(count(later, PEControl::kAccumulateLocal), 100u);
  EXPECT_EQ(count(later, PEControl::kTransmitPartial), 0u);
  EXPECT_THROW(pe_commands(a, Interpretation::kOuter, 0, true), InvalidArgument);
  EXPECT_THROW(pe_commands(a, Interpretation::kOuter, 129, true), InvalidArgument);
}

TEST(PEExecuteTest, InnerHalfArrayDisablesTheOtherHalf) {
  const auto a = veda_array(Interpretation::kInner);
  const auto s = make_schedule({64, 10}, Interpretation::kInner, 128);
  const auto exec = pe_array_execute(s, a, TraceLevel::kFull);
  EXPECT_EQ(exec.cycles, 10u);
  EXPECT_DOUBLE_EQ(exec.utilization(), 0.5);
  ASSERT_EQ(exec.trace.size(), 10u);
  for (const auto& t : exec.trace) {
    EXPECT_EQ(t.active_lanes, 64u);
    EXPECT_EQ(t.command_counts[static_cast<int>(PEControl::kDisable)], 64u);
    EXPECT_EQ(t.commands.size(), 128u);
  }
  EXPECT_EQ(exec.command_totals[static_cast<int>(PEControl::kClearRegister)], 10u);
}

TEST(PEExecuteTest, InnerMultiPassAccumulatesAtRoot) {
  const auto a = veda_array(Interpretation::kInner);
  const auto s = make_schedule({300, 4}, Interpretation::kInner, 128);
  const auto exec = pe_array_execute(s, a, TraceLevel::kSummary);
  EXPECT_EQ(exec.cycles, 12u);
  EXPECT_EQ(exec.command_totals[static_cast<int>(PEControl::kClearRegister)], 4u);
  EXPECT_EQ(exec.command_totals[static_cast<int>(PEControl::kAccumulateLocal)], 8u);
  // Cycle order: every pass of output 0, then output 1.
  EXPECT_EQ(exec.trace[0].pass, 0u);
  EXPECT_EQ(exec.trace[2].pass, 2u);
  EXPECT_EQ(exec.trace[2].active_lanes, 44u);
  EXPECT_EQ(exec.trace[3].pass, 0u);
  EXPECT_TRUE(exec.trace[0].commands.empty());
}

TEST(PEExecuteTest, OuterFullArray) {
  const auto a = veda_array(Interpretation::kOuter);
  const auto s = make_schedule({64, 128}, Interpretation::kOuter, 128);
  const auto exec = pe_array_execute(s, a);
  EXPECT_EQ(exec.cycles, 64u);
  EXPECT_DOUBLE_EQ(exec.utilization(), 1.0);
  EXPECT_EQ(exec.command_totals[static_cast<int>(PEControl::kClearRegister)], 128u);
  EXPECT_EQ(exec.command_totals[static_cast<int>(PEControl::kAccumulateLocal)], 128u * 63u);
  EXPECT_TRUE(exec.trace.empty());
}

TEST(PEExecuteTest, MismatchedConfigurationThrows) {
  const auto s = make_schedule({64, 10}, Interpretation::kInner, 128);
  EXPECT_THROW(pe_array_execute(s, veda_array(Interpretation::kOuter)), InvalidConfiguration);
  const auto s64 = make_schedule({64, 10}, Interpretation::kInner, 64);
  EXPECT_THROW(pe_array_execute(s64, veda_array(Interpretation::kInner)), InvalidConfiguration);
}

// Every MAC occupies exactly one lane-cycle, so the replay reproduces the
// analytic schedule.
TEST(PEExecuteTest, ReplayMatchesAnalyticSchedule) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 300; ++trial) {
    const dataflow::GemvProblem p{1 + gen() % 700, 1 + gen() % 300};
    for (auto mode : {Interpretation::kInner, Interpretation::kOuter}) {
      const auto s = make_schedule(p, mode, 128);
      const auto exec = pe_array_execute(s, veda_array(mode));
      ASSERT_EQ(exec.cycles, s.total_cycles);
      ASSERT_EQ(exec.active_lane_cycles, p.k * p.n);
      ASSERT_NEAR(exec.utilization(), s.utilization, 1e-12);
      std::uint64_t total = 0;
      for (auto c : exec.command_totals) total += c;
      ASSERT_EQ(total, exec.cycles * 128u);
    }
  }
}

TEST(PEExecuteTest, PartialPassUtilization) {
  const auto a = veda_array(Interpretation::kInner);
  const auto full = pe_array_execute(make_schedule({256, 8}, Interpretation::kInner, 128), a);
  EXPECT_DOUBLE_EQ(full.utilization(), 1.0);
  const auto odd = pe_array_execute(make_schedule({257, 8}, Interpretation::kInner, 128), a);
  EXPECT_NEAR(odd.utilization(), 257.0 / 384.0, 1e-12);
  EXPECT_NEAR(odd.utilization(), 0.669, 5e-4);
  EXPECT_NEAR(fixed_tree_schedule({257, 8}, 256).utilization, 0.502, 5e-4);
}

}  // namespace
}  // namespace veda::cyclesim
