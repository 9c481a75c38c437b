// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <map>
#include <string>
#include <utility>

#include "veda/cyclesim.hpp"
#include "veda/error.hpp"

namespace veda::cyclesim {
namespace {

constexpr std::size_t idx(PEControl c) { return static_cast<std::size_t>(c); }

std::array<std::uint32_t, 4> count_commands(const std::vector<PEControl>& cmds) {
  std::array<std::uint32_t, 4> counts{};
  for (auto c : cmds) ++counts[idx(c)];
  return counts;
}

}  // namespace

std::string_view to_string(PEControl c) {
  switch (c) {
    case PEControl::kAccumulateLocal: return "accumulate-local";
    case PEControl::kTransmitPartial: return "transmit-partial";
    case PEControl::kClearRegister: return "clear-register";
    case PEControl::kDisable: return "disable";
  }
  return "unknown";
}

void PEArrayModel::validate() const {
  if (rows == 0 || cols == 0 || banks == 0) throw InvalidConfiguration("PE array: empty geometry");
  if (!std::has_single_bit(cols) || !std::has_single_bit(global_rows())) {
    throw InvalidConfiguration("PE array: columns and rows * banks must be powers of two");
  }
}

std::uint32_t inner_root_lane(const PEArrayModel& arr) {
  const std::uint32_t gr = arr.global_rows();
  if (gr > 1) return arr.lane(gr / 2 - 1, arr.cols - 1);
  if (arr.cols > 1) return arr.lane(0, arr.cols / 2 - 1);
  return 0;
}

std::vector<PEControl> pe_commands(const PEArrayModel& arr, Interpretation mode,
                                   std::uint32_t used_lanes, bool starts_output) {
  arr.validate();
  const std::uint32_t lanes = arr.lanes();
  if (used_lanes == 0 || used_lanes > lanes) throw InvalidArgument("pe_commands: used lanes out of range");
  std::vector<PEControl> cmds(lanes, PEControl::kDisable);

  if (mode == Interpretation::kOuter) {
    for (std::uint32_t l = 0; l < used_lanes; ++l) {
      cmds[l] = starts_output ? PEControl::kClearRegister : PEControl::kAccumulateLocal;
    }
    return cmds;
  }

  for (std::uint32_t l = 0; l < used_lanes; ++l) cmds[l] = PEControl::kTransmitPartial;
  const std::uint32_t cols = arr.cols;
  const std::uint32_t grows = arr.global_rows();
  // L1 trees within each row.
  for (std::uint32_t r = 0; r < grows; ++r) {
    for (std::uint32_t span = 2; span <= cols; span *= 2) {
      for (std::uint32_t s = 0; s < cols; s += span) {
        if (arr.lane(r, s) < used_lanes) cmds[arr.lane(r, s + span / 2 - 1)] = PEControl::kTransmitPartial;
      }
    }
  }
  // L2 tree across rows, in the last column.
  for (std::uint32_t span = 2; span <= grows; span *= 2) {
    for (std::uint32_t s = 0; s < grows; s += span) {
      if (arr.lane(s, 0) < used_lanes) cmds[arr.lane(s + span / 2 - 1, cols - 1)] = PEControl::kTransmitPartial;
    }
  }
  cmds[inner_root_lane(arr)] = starts_output ? PEControl::kClearRegister : PEControl::kAccumulateLocal;
  return cmds;
}

PEExecution pe_array_execute(const GemvSchedule& schedule, const PEArrayModel& arr, TraceLevel level) {
  arr.validate();
  if (schedule.interpretation != arr.mode) {
    throw InvalidConfiguration("pe_array_execute: schedule is " +
                               std::string(dataflow::to_string(schedule.interpretation)) +
                               " but the array is configured " + std::string(dataflow::to_string(arr.mode)));
  }
  if (schedule.lanes_available != arr.lanes()) {
    throw InvalidConfiguration("pe_array_execute: schedule lanes " + std::to_string(schedule.lanes_available) +
                               " != array lanes " + std::to_string(arr.lanes()));
  }

  // Command patterns depend only on (used lanes, starts_output).
  std::map<std::pair<std::uint32_t, bool>, std::pair<std::vector<PEControl>, std::array<std::uint32_t, 4>>> cache;
  auto pattern = [&](std::uint32_t used, bool first) -> const auto& {
    auto key = std::make_pair(used, first);
    auto it = cache.find(key);
    if (it == cache.end()) {
      auto cmds = pe_commands(arr, arr.mode, used, first);
      auto counts = count_commands(cmds);
      it = cache.emplace(key, std::make_pair(std::move(cmds), counts)).first;
    }
    return it->second;
  };

  PEExecution exec;
  const std::uint32_t lanes = arr.lanes();
  auto step = [&](std::uint64_t pass, std::uint32_t used, bool first) {
    const auto& [cmds, counts] = pattern(used, first);
    for (std::size_t i = 0; i < 4; ++i) exec.command_totals[i] += counts[i];
    exec.active_lane_cycles += used;
    exec.idle_lane_cycles += lanes - used;
    if (level != TraceLevel::kNone) {
      CycleTrace t;
      t.cycle = exec.cycles;
      t.pass = pass;
      t.active_lanes = used;
      t.idle_lanes = lanes - used;
      t.command_counts = counts;
      if (level == TraceLevel::kFull) t.commands = cmds;
      exec.trace.push_back(std::move(t));
    }
    ++exec.cycles;
  };

  const std::uint64_t temporal = schedule.temporal_extent();
  if (schedule.interpretation == Interpretation::kInner) {
    // One output element per group of passes; the root accumulates across them.
    for (std::uint64_t out = 0; out < temporal; ++out) {
      for (std::uint64_t p = 0; p < schedule.passes; ++p) step(p, schedule.lanes_in_pass(p), p == 0);
    }
  } else {
    // One broadcast scalar per cycle; each pass owns a slice of output columns.
    for (std::uint64_t p = 0; p < schedule.passes; ++p) {
      const std::uint32_t used = schedule.lanes_in_pass(p);
      for (std::uint64_t c = 0; c < temporal; ++c) step(p, used, c == 0);
    }
  }
  return exec;
}

}  // namespace veda::cyclesim
