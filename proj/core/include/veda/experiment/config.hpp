// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment config: one JSON document with schema_version 1.
//
//   {
//     "schema_version": 1,                 required
//     "name": "...", "command": "simulate", "seed": 1,
//     "workload":   {layers, hidden, heads, head_dim, ffn_dim, ffn_gated,
//                    prompt_len, gen_len, max_seq},
//     "eviction":   {ratio, reserved, coeff_a, coeff_b, target},   {} = off
//     "arch":       {name, dataflow, pe_rows, pe_cols, pe_banks, tree_width,
//                    frequency_hz, op_overhead_cycles, elementwise_per_cycle,
//                    sfu: {...}, memory: {...}},
//     "sweep":      {gen_lengths: [..] | {from, to, step}, ratios, seeds},
//     "evict_bench":{traces, policies, prompt_len, reserved, write_traces,
//                    toy: {...}, scenario: {...}}
//   }
//
// Unknown keys anywhere are rejected with their dotted path.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "veda/attnbench.hpp"
#include "veda/cyclesim.hpp"

namespace veda::experiment {

enum class CommandKind : std::uint8_t {
  kSimulate,
  kAblateDataflow,
  kAblateEviction,
  kEvictBench,
  kValidateConfig,
};

std::string_view to_string(CommandKind c);
CommandKind command_from_string(std::string_view name);

struct SweepAxes {
  std::vector<std::uint64_t> gen_lengths;
  std::vector<double> ratios;
  std::vector<std::uint64_t> seeds;
};

struct EvictBenchSpec {
  std::vector<std::string> traces = {"toy", "item-count", "criteria", "outlier", "sink", "recency"};
  std::vector<std::string> policies = {"voting", "h2o", "sliding-window"};
  std::size_t prompt_len = 0;  // 0 = half the trace length
  std::size_t reserved = 4;
  bool write_traces = false;
  attnbench::ToyModelConfig toy;
  attnbench::ScenarioParams scenario;
};

struct ExperimentSpec {
  int schema_version = 1;
  std::string name = "unnamed";
  CommandKind command = CommandKind::kSimulate;
  std::uint64_t seed = 1;
  cyclesim::WorkloadConfig workload;
  cyclesim::ArchConfig arch;
  SweepAxes sweep;
  EvictBenchSpec bench;

  /// Cross-field checks; throws ConfigError with the offending key path.
  void validate() const;
};

/// Throws ConfigError on schema violations (key path attached) and IoError
/// when the file cannot be read.
ExperimentSpec parse_config(const std::filesystem::path& path);
ExperimentSpec parse_config_text(std::string_view text);

/// Canonical JSON: every field written, keys sorted, two-space indent.
std::string serialize(const ExperimentSpec& spec);

/// FNV-1a 64 over the canonical JSON, as 16 lowercase hex digits.
std::string config_hash(const ExperimentSpec& spec);

std::vector<std::string> preset_names();
std::string_view preset_text(std::string_view name);
ExperimentSpec load_preset(std::string_view name);

std::string_view tool_version();

}  // namespace veda::experiment
