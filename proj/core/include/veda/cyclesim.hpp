// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Analytic cycle model of the accelerator: reconfigurable PE array, SFU with
// optional element-serial scheduling, flat-bandwidth HBM, plus a fixed
// adder-tree baseline. Operator cost is max(compute, memory) + overhead.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veda/dataflow.hpp"
#include "veda/eviction.hpp"

namespace veda::cyclesim {

using dataflow::GemvProblem;
using dataflow::GemvSchedule;
using dataflow::Interpretation;

// ---------------------------------------------------------------------------
// PE array

enum class PEControl : std::uint8_t {
  kAccumulateLocal = 0b00,
  kTransmitPartial = 0b01,
  kClearRegister = 0b10,  // overwrite the register with this cycle's input
  kDisable = 0b11,
};

std::string_view to_string(PEControl c);

enum class PEKind : std::uint8_t { kTypeA, kTypeB };

struct PEArrayModel {
  std::uint32_t rows = 8;  // per bank
  std::uint32_t cols = 8;  // power of two
  std::uint32_t banks = 2;
  Interpretation mode = Interpretation::kInner;

  std::uint32_t lanes() const noexcept { return rows * cols * banks; }
  std::uint32_t global_rows() const noexcept { return rows * banks; }
  /// Odd 1-based columns are type-A (one operand from the own multiplier),
  /// even columns type-B (both operands from other PEs).
  PEKind kind(std::uint32_t col) const noexcept { return col % 2 == 0 ? PEKind::kTypeA : PEKind::kTypeB; }
  /// Lane index of (global row, column), row-major.
  std::uint32_t lane(std::uint32_t global_row, std::uint32_t col) const noexcept {
    return global_row * cols + col;
  }
  void validate() const;
};

/// Command issued to every PE during one cycle of a schedule. Lanes are
/// numbered row-major over global rows (bank-major), and pass p drives the
/// first lanes_in_pass(p) of them.
///
/// Outer mode: each active lane owns an output column; it clears (loads) on
/// the first cycle of a pass and accumulates afterwards. No transmission.
///
/// Inner mode: products reduce through an L1 tree per row, hosted at column
/// s + 2^(L-1) - 1 for the level-L node starting at column s, then through an
/// L2 tree over global rows hosted in the last column. The root clears on
/// the first pass of an output and accumulates on later passes; PEs with an
/// active product or an active tree node transmit; the rest are disabled.
/// `starts_output` is the first cycle of a pass (outer) or the first pass of
/// an output element (inner).
std::vector<PEControl> pe_commands(const PEArrayModel& arr, Interpretation mode,
                                   std::uint32_t used_lanes, bool starts_output);

/// Position of the inner-mode reduction root.
std::uint32_t inner_root_lane(const PEArrayModel& arr);

struct CycleTrace {
  std::uint64_t cycle = 0;
  std::uint64_t pass = 0;
  std::uint32_t active_lanes = 0;
  std::uint32_t idle_lanes = 0;
  std::array<std::uint32_t, 4> command_counts{};  // indexed by PEControl value
  std::vector<PEControl> commands;                 // per lane, only with TraceLevel::kFull
};

enum class TraceLevel : std::uint8_t { kNone, kSummary, kFull };

struct PEExecution {
  std::uint64_t cycles = 0;
  std::uint64_t active_lane_cycles = 0;
  std::uint64_t idle_lane_cycles = 0;
  std::array<std::uint64_t, 4> command_totals{};
  std::vector<CycleTrace> trace;

  double utilization() const noexcept {
    const auto total = active_lane_cycles + idle_lane_cycles;
    return total == 0 ? 0.0 : static_cast<double>(active_lane_cycles) / static_cast<double>(total);
  }
};

/// Replays the schedule cycle by cycle. Throws InvalidConfiguration when the
/// schedule's interpretation or lane count does not match the array.
PEExecution pe_array_execute(const GemvSchedule& schedule, const PEArrayModel& arr,
                             TraceLevel level = TraceLevel::kNone);

// ---------------------------------------------------------------------------
// SFU and memory

enum class SfuMode : std::uint8_t { kConventional, kElementSerial };
enum class SfuOp : std::uint8_t { kSoftmax, kLayerNorm };

std::string_view to_string(SfuMode m);
SfuMode sfu_mode_from_string(std::string_view name);

struct SFUModel {
  std::uint32_t exp_units = 2;
  std::uint32_t div_units = 2;
  std::uint32_t sqrt_units = 1;
  std::uint32_t mul_units = 2;
  std::uint32_t add_units = 4;
  std::uint32_t queue_depth = 32;
  SfuMode mode = SfuMode::kElementSerial;
  std::uint32_t flush_epsilon = 8;

  void validate() const;
};

/// Cycles added to the critical path between the producing and consuming
/// GEMVs. Element-serial: flush_epsilon. Conventional, stages serialized:
///   softmax   ceil(l/add) + ceil(l/exp) + ceil(l/div)
///   layernorm ceil(l/add) + 1 + ceil(l/div)
std::uint64_t sfu_latency(SfuOp op, std::uint64_t l, const SFUModel& sfu);

/// Idle cycles forced onto a one-element-per-cycle producer and consumer by a
/// single element-serial SFU with a queue of sfu.queue_depth entries.
std::uint64_t element_serial_stall_cycles(SfuOp op, std::uint64_t l, const SFUModel& sfu);

struct MemoryModel {
  std::uint64_t bandwidth_bytes_per_cycle = 256;
  std::uint64_t element_bytes = 2;
  std::uint64_t on_chip_buffer_bytes = 262144;

  void validate() const;
};

std::uint64_t memory_cycles(std::uint64_t bytes, const MemoryModel& mem);

// ---------------------------------------------------------------------------
// Architecture and workload

enum class DataflowKind : std::uint8_t { kFlexible, kFixedTree };

std::string_view to_string(DataflowKind d);
DataflowKind dataflow_from_string(std::string_view name);

struct ArchConfig {
  std::string name = "veda";
  DataflowKind dataflow = DataflowKind::kFlexible;
  PEArrayModel array;
  std::uint32_t tree_width = 256;  // fixed-tree only
  SFUModel sfu;
  MemoryModel memory;
  double frequency_hz = 1e9;
  std::uint32_t op_overhead_cycles = 8;  // per PE-array GEMV invocation
  std::uint32_t elementwise_per_cycle = 128;

  std::uint32_t lanes() const noexcept { return array.lanes(); }
  /// Multiply-accumulates per cycle at full utilization; equal to lanes for
  /// both dataflows.
  std::uint64_t peak_macs_per_cycle() const noexcept { return array.lanes(); }
  /// Cycles per adder-tree pass: a tree wider than the MAC budget is fed over
  /// several cycles.
  std::uint64_t tree_pass_interval() const noexcept;
  void validate() const;

  static ArchConfig veda();
  /// Fixed 256-wide tree at matched peak MACs and SFU counts, conventional SFU.
  static ArchConfig baseline();
  static ArchConfig baseline_of(const ArchConfig& arch);
};

struct WorkloadConfig {
  std::size_t layers = 32;
  std::size_t hidden = 4096;
  std::size_t heads = 32;
  std::size_t head_dim = 128;
  std::size_t ffn_dim = 11008;
  bool ffn_gated = false;  // gate and up projections both of width ffn_dim
  std::size_t prompt_len = 512;
  std::size_t gen_len = 1024;
  std::optional<eviction::EvictionConfig> eviction;
  std::size_t max_seq = 4096;

  std::size_t ffn_matrices() const noexcept { return ffn_gated ? 3 : 2; }
  std::uint64_t parameter_count() const noexcept;  // linear layers only
  void validate() const;

  static WorkloadConfig llama2_7b();
};

// ---------------------------------------------------------------------------
// Operators and reports

enum class OperatorKind : std::uint8_t {
  kQkvGen,
  kScore,  // q x K^T
  kSoftmax,
  kContext,  // s' x V
  kProjection,
  kFfn1,
  kActivation,
  kFfn2,
  kLayerNorm,
  kResidual,
  kVoting,
};
inline constexpr std::size_t kNumOperators = 11;

std::string_view to_string(OperatorKind k);
bool is_gemv(OperatorKind k) noexcept;
bool is_attention(OperatorKind k) noexcept;  // score, softmax, context

/// Interpretation the flexible array uses for each GEMV.
Interpretation default_interpretation(OperatorKind k);

enum class Phase : std::uint8_t { kPrefill, kGeneration };
std::string_view to_string(Phase p);

/// One operator instance.
///   weight GEMVs: k x n, `rows` tokens share the weights
///   score/context: one head; `rows` = 1 with `length` live positions, or
///     rows = P with causal = true (row t sees t positions)
///   softmax/layernorm/activation/residual: `rows` vectors of `length`
struct OperatorShape {
  OperatorKind kind = OperatorKind::kQkvGen;
  std::uint64_t k = 0;
  std::uint64_t n = 0;
  std::uint64_t length = 0;
  std::uint64_t rows = 1;
  bool causal = false;
  std::uint64_t extra_bytes = 0;  // traffic beyond the operand stream, e.g. KV write-back
};

struct OperatorCost {
  std::uint64_t compute_cycles = 0;
  std::uint64_t memory_cycles = 0;
  std::uint64_t overhead_cycles = 0;
  std::uint64_t cycles = 0;  // max(compute, memory) + overhead
  std::uint64_t bytes = 0;
  std::uint64_t macs = 0;
  std::uint64_t invocations = 0;
};

OperatorCost simulate_operator(const OperatorShape& shape, const ArchConfig& arch, Phase phase);

struct OperatorStats {
  OperatorKind kind = OperatorKind::kQkvGen;
  std::uint64_t cycles = 0;
  std::uint64_t compute_cycles = 0;
  std::uint64_t memory_cycles = 0;
  std::uint64_t overhead_cycles = 0;
  std::uint64_t bytes = 0;
  std::uint64_t macs = 0;
  std::uint64_t invocations = 0;
};

struct PhaseReport {
  std::array<OperatorStats, kNumOperators> ops{};
  std::uint64_t cycles = 0;
  std::uint64_t bytes = 0;
  std::uint64_t macs = 0;

  const OperatorStats& op(OperatorKind k) const { return ops[static_cast<std::size_t>(k)]; }
  std::uint64_t attention_cycles() const noexcept;
};

struct CycleReport {
  std::string arch;
  PhaseReport prefill;
  PhaseReport generation;
  std::vector<std::uint64_t> step_cycles;            // per generated token
  std::vector<std::uint64_t> step_attention_cycles;  // score + softmax + context, all layers and heads
  std::vector<std::uint64_t> step_lengths;           // attention length per generated token
  std::uint64_t peak_macs_per_cycle = 0;
  double frequency_hz = 1e9;
  double tokens_per_s = 0.0;
  double prefill_utilization = 0.0;
  double generation_utilization = 0.0;

  std::uint64_t total_cycles() const noexcept { return prefill.cycles + generation.cycles; }
  double mean_step_attention_cycles() const;
};

CycleReport simulate_prefill(const WorkloadConfig& w, const ArchConfig& arch);
CycleReport simulate_generation(const WorkloadConfig& w, const ArchConfig& arch);
CycleReport simulate(const WorkloadConfig& w, const ArchConfig& arch);
/// Requires a fixed-tree, conventional-SFU architecture.
CycleReport simulate_baseline(const WorkloadConfig& w, const ArchConfig& arch_baseline);

/// Score + softmax + context cycles of one generation step over `length`
/// positions, summed over layers and heads.
std::uint64_t attention_step_cycles(const WorkloadConfig& w, const ArchConfig& arch,
                                    std::uint64_t length);

// ---------------------------------------------------------------------------
// Ablations

struct DataflowPoint {
  std::uint64_t gen_len = 0;
  double baseline = 0.0;         // mean attention cycles per generated token
  double flexible = 0.0;         // flexible dataflow, conventional SFU
  double flexible_serial = 0.0;  // flexible dataflow, element-serial SFU
};

/// `arch` supplies the array, SFU counts and memory; the three series are
/// derived from it. Eviction in `w` is ignored. Every G must be >= 1.
std::vector<DataflowPoint> ablation_dataflow(const WorkloadConfig& w, const ArchConfig& arch,
                                             std::span<const std::uint64_t> gen_points);

struct EvictionPoint {
  double ratio = 1.0;
  std::uint64_t gen_len = 0;
  std::size_t target = 0;
  double without_eviction = 0.0;  // mean attention cycles per generated token
  double with_eviction = 0.0;
  double speedup = 1.0;
};

/// Rows ordered by ratio, then G. R, a and b come from w.eviction when set.
std::vector<EvictionPoint> ablation_eviction(const WorkloadConfig& w, const ArchConfig& arch,
                                             std::span<const double> ratios,
                                             std::span<const std::uint64_t> gen_points);

}  // namespace veda::cyclesim
