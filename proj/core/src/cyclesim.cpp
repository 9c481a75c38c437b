// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "veda/cyclesim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "veda/error.hpp"

namespace veda::cyclesim {
namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }
std::uint64_t round_up(std::uint64_t a, std::uint64_t m) { return ceil_div(a, m) * m; }

constexpr std::size_t op_index(OperatorKind k) { return static_cast<std::size_t>(k); }

// Compute cycles of one GEMV invocation, excluding overhead.
std::uint64_t gemv_cycles(const ArchConfig& arch, Interpretation interp, std::uint64_t k, std::uint64_t n) {
  if (arch.dataflow == DataflowKind::kFixedTree) {
    return dataflow::fixed_tree_schedule({k, n}, arch.tree_width).total_cycles * arch.tree_pass_interval();
  }
  return dataflow::make_schedule({k, n}, interp, arch.lanes()).total_cycles;
}

// Positions a causal row t actually visits: the baseline skips only whole
// tree-width tiles.
std::uint64_t causal_extent(const ArchConfig& arch, std::uint64_t t, std::uint64_t rows) {
  if (arch.dataflow == DataflowKind::kFixedTree) return std::min(round_up(t, arch.tree_width), rows);
  return t;
}

void accumulate(OperatorStats& s, const OperatorCost& c, std::uint64_t times) {
  s.cycles += c.cycles * times;
  s.compute_cycles += c.compute_cycles * times;
  s.memory_cycles += c.memory_cycles * times;
  s.overhead_cycles += c.overhead_cycles * times;
  s.bytes += c.bytes * times;
  s.macs += c.macs * times;
  s.invocations += c.invocations * times;
}

void finalize(PhaseReport& p) {
  p.cycles = p.bytes = p.macs = 0;
  for (std::size_t i = 0; i < kNumOperators; ++i) {
    p.ops[i].kind = static_cast<OperatorKind>(i);
    p.cycles += p.ops[i].cycles;
    p.bytes += p.ops[i].bytes;
    p.macs += p.ops[i].macs;
  }
}

double utilization_of(const PhaseReport& p, std::uint64_t peak) {
  return p.cycles == 0 ? 0.0 : static_cast<double>(p.macs) / (static_cast<double>(peak) * static_cast<double>(p.cycles));
}

// Operators of one layer whose shape does not depend on the attention length.
struct LayerPlan {
  std::vector<std::pair<OperatorShape, std::uint64_t>> fixed;  // shape, multiplicity
};

LayerPlan layer_plan(const WorkloadConfig& w, std::uint64_t rows) {
  const std::uint64_t d_model = w.hidden;
  const std::uint64_t up_width = w.ffn_dim * (w.ffn_gated ? 2 : 1);
  LayerPlan plan;
  auto add = [&](OperatorShape s, std::uint64_t times) { plan.fixed.emplace_back(s, times); };
  add({OperatorKind::kLayerNorm, 0, 0, d_model, rows, false, 0}, 2);
  add({OperatorKind::kQkvGen, d_model, 3 * d_model, 0, rows, false, 0}, 1);
  add({OperatorKind::kProjection, d_model, d_model, 0, rows, false, 0}, 1);
  add({OperatorKind::kFfn1, d_model, up_width, 0, rows, false, 0}, 1);
  add({OperatorKind::kActivation, 0, 0, up_width, rows, false, 0}, 1);
  add({OperatorKind::kFfn2, w.ffn_dim, d_model, 0, rows, false, 0}, 1);
  add({OperatorKind::kResidual, 0, 0, d_model, rows, false, 0}, 2);
  return plan;
}

void add_fixed_ops(PhaseReport& report, const LayerPlan& plan, const WorkloadConfig& w,
                   const ArchConfig& arch, Phase phase, std::uint64_t rows, std::uint64_t times) {
  for (auto [shape, mult] : plan.fixed) {
    if (shape.kind == OperatorKind::kQkvGen) {
      // K and V of every row are written back to the cache.
      shape.extra_bytes = rows * 2 * w.hidden * arch.memory.element_bytes;
    }
    accumulate(report.ops[op_index(shape.kind)], simulate_operator(shape, arch, phase), mult * times);
  }
}

// Score, softmax and context of one head at generation length `l`.
std::array<OperatorCost, 3> head_attention(const WorkloadConfig& w, const ArchConfig& arch, std::uint64_t l) {
  return {simulate_operator({OperatorKind::kScore, w.head_dim, 0, l, 1, false, 0}, arch, Phase::kGeneration),
          simulate_operator({OperatorKind::kSoftmax, 0, 0, l, 1, false, 0}, arch, Phase::kGeneration),
          simulate_operator({OperatorKind::kContext, 0, w.head_dim, l, 1, false, 0}, arch, Phase::kGeneration)};
}

std::uint64_t vote_bytes(std::uint64_t live) { return 2 * live; }

}  // namespace

std::string_view to_string(SfuMode m) {
  return m == SfuMode::kConventional ? "conventional" : "element-serial";
}

SfuMode sfu_mode_from_string(std::string_view name) {
  if (name == "conventional") return SfuMode::kConventional;
  if (name == "element-serial") return SfuMode::kElementSerial;
  throw InvalidArgument("unknown SFU mode '" + std::string(name) + "'");
}

void SFUModel::validate() const {
  if (exp_units == 0 || div_units == 0 || sqrt_units == 0 || mul_units == 0 || add_units == 0) {
    throw InvalidConfiguration("SFU: every unit count must be >= 1");
  }
  if (queue_depth == 0) throw InvalidConfiguration("SFU: queue depth must be >= 1");
}

std::uint64_t sfu_latency(SfuOp op, std::uint64_t l, const SFUModel& sfu) {
  if (l == 0) throw InvalidArgument("sfu_latency: length must be >= 1");
  if (sfu.mode == SfuMode::kElementSerial) return sfu.flush_epsilon;
  if (op == SfuOp::kSoftmax) {
    return ceil_div(l, sfu.add_units) + ceil_div(l, sfu.exp_units) + ceil_div(l, sfu.div_units);
  }
  return ceil_div(l, sfu.add_units) + ceil_div(1, sfu.sqrt_units) + ceil_div(l, sfu.div_units);
}

std::uint64_t element_serial_stall_cycles(SfuOp op, std::uint64_t l, const SFUModel& sfu) {
  sfu.validate();
  if (l == 0) throw InvalidArgument("element_serial_stall_cycles: length must be >= 1");
  // Elements per cycle a unit pool sustains, given per-element op counts.
  auto rate = [&](double adds, double exps, double muls, double divs) {
    double r = 1e9;
    if (adds > 0) r = std::min(r, sfu.add_units / adds);
    if (exps > 0) r = std::min(r, sfu.exp_units / exps);
    if (muls > 0) r = std::min(r, sfu.mul_units / muls);
    if (divs > 0) r = std::min(r, sfu.div_units / divs);
    return r;
  };
  // Reduction: compare/subtract/accumulate + exp (softmax); accumulate x and
  // x^2 (layernorm). Normalization: subtract, exp, divide (softmax);
  // subtract, scale by 1/std, gamma, beta (layernorm).
  const double reduce = op == SfuOp::kSoftmax ? rate(3, 1, 0, 0) : rate(2, 0, 1, 0);
  const double normalize = op == SfuOp::kSoftmax ? rate(1, 1, 0, 1) : rate(2, 0, 2, 0);
  const std::uint64_t depth = sfu.queue_depth;

  std::uint64_t stalls = 0;
  // Producer GEMV pushes one element per cycle into the SFU queue.
  std::uint64_t produced = 0, queued = 0;
  double credit = 0.0;
  while (produced < l || queued > 0) {
    if (produced < l) {
      if (queued < depth) {
        ++queued;
        ++produced;
      } else {
        ++stalls;
      }
    }
    credit += reduce;
    const auto take = std::min<std::uint64_t>(queued, static_cast<std::uint64_t>(credit));
    queued -= take;
    credit -= static_cast<double>(take);
    if (queued == 0) credit = std::min(credit, reduce);
  }
  // Consumer GEMV pulls one normalized element per cycle once started.
  std::uint64_t emitted = 0, ready = 0, consumed = 0;
  bool started = false;
  credit = 0.0;
  while (consumed < l) {
    credit += normalize;
    const auto make = std::min({static_cast<std::uint64_t>(credit), depth - ready, l - emitted});
    ready += make;
    emitted += make;
    credit -= static_cast<double>(make);
    if (ready == depth) credit = std::min(credit, normalize);
    if (ready > 0) {
      --ready;
      ++consumed;
      started = true;
    } else if (started) {
      ++stalls;
    }
  }
  return stalls;
}

void MemoryModel::validate() const {
  if (bandwidth_bytes_per_cycle == 0) throw InvalidConfiguration("memory: bandwidth must be > 0");
  if (element_bytes == 0) throw InvalidConfiguration("memory: element bytes must be > 0");
  if (on_chip_buffer_bytes < 2) throw InvalidConfiguration("memory: buffer too small");
}

std::uint64_t memory_cycles(std::uint64_t bytes, const MemoryModel& mem) {
  if (mem.bandwidth_bytes_per_cycle == 0) throw InvalidConfiguration("memory: bandwidth must be > 0");
  return ceil_div(bytes, mem.bandwidth_bytes_per_cycle);
}

std::string_view to_string(DataflowKind d) { return d == DataflowKind::kFlexible ? "flexible" : "fixed-tree"; }

DataflowKind dataflow_from_string(std::string_view name) {
  if (name == "flexible") return DataflowKind::kFlexible;
  if (name == "fixed-tree") return DataflowKind::kFixedTree;
  throw InvalidArgument("unknown dataflow '" + std::string(name) + "'");
}

std::uint64_t ArchConfig::tree_pass_interval() const noexcept {
  if (dataflow == DataflowKind::kFlexible) return 1;
  return std::max<std::uint64_t>(1, ceil_div(tree_width, peak_macs_per_cycle()));
}

void ArchConfig::validate() const {
  array.validate();
  sfu.validate();
  memory.validate();
  if (tree_width == 0) throw InvalidConfiguration("arch: tree width must be >= 1");
  if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz)) throw InvalidConfiguration("arch: frequency must be > 0");
  if (elementwise_per_cycle == 0) throw InvalidConfiguration("arch: elementwise throughput must be >= 1");
}

ArchConfig ArchConfig::veda() { return ArchConfig{}; }

ArchConfig ArchConfig::baseline() { return baseline_of(veda()); }

ArchConfig ArchConfig::baseline_of(const ArchConfig& arch) {
  ArchConfig b = arch;
  b.name = "baseline";
  b.dataflow = DataflowKind::kFixedTree;
  b.sfu.mode = SfuMode::kConventional;
  return b;
}

std::uint64_t WorkloadConfig::parameter_count() const noexcept {
  const std::uint64_t d = hidden;
  return static_cast<std::uint64_t>(layers) * (4 * d * d + ffn_matrices() * d * ffn_dim);
}

void WorkloadConfig::validate() const {
  if (layers == 0 || heads == 0 || head_dim == 0) throw InvalidConfiguration("workload: layers, heads and head_dim must be >= 1");
  if (hidden != heads * head_dim) throw InvalidConfiguration("workload: hidden must equal heads * head_dim");
  if (ffn_dim < hidden) throw InvalidConfiguration("workload: ffn_dim must be >= hidden");
  if (prompt_len == 0) throw InvalidConfiguration("workload: prompt length must be >= 1");
  if (prompt_len + gen_len > max_seq) throw InvalidConfiguration("workload: prompt + generation exceeds max_seq");
  if (eviction) {
    try {
      eviction->validate();
    } catch (const InvalidArgument& e) {
      throw InvalidConfiguration(std::string("workload: ") + e.what());
    }
  }
}

WorkloadConfig WorkloadConfig::llama2_7b() {
  WorkloadConfig w;
  w.ffn_gated = true;
  return w;
}

std::string_view to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::kQkvGen: return "qkv-gen";
    case OperatorKind::kScore: return "score";
    case OperatorKind::kSoftmax: return "softmax";
    case OperatorKind::kContext: return "context";
    case OperatorKind::kProjection: return "projection";
    case OperatorKind::kFfn1: return "ffn1";
    case OperatorKind::kActivation: return "activation";
    case OperatorKind::kFfn2: return "ffn2";
    case OperatorKind::kLayerNorm: return "layernorm";
    case OperatorKind::kResidual: return "residual";
    case OperatorKind::kVoting: return "voting";
  }
  return "unknown";
}

bool is_gemv(OperatorKind k) noexcept {
  switch (k) {
    case OperatorKind::kQkvGen:
    case OperatorKind::kScore:
    case OperatorKind::kContext:
    case OperatorKind::kProjection:
    case OperatorKind::kFfn1:
    case OperatorKind::kFfn2:
      return true;
    default:
      return false;
  }
}

bool is_attention(OperatorKind k) noexcept {
  return k == OperatorKind::kScore || k == OperatorKind::kSoftmax || k == OperatorKind::kContext;
}

Interpretation default_interpretation(OperatorKind k) {
  switch (k) {
    case OperatorKind::kScore:
    case OperatorKind::kProjection:
    case OperatorKind::kFfn2:
      return Interpretation::kInner;
    case OperatorKind::kQkvGen:
    case OperatorKind::kContext:
    case OperatorKind::kFfn1:
      return Interpretation::kOuter;
    default:
      throw InvalidArgument("default_interpretation: " + std::string(to_string(k)) + " is not a GEMV");
  }
}

std::string_view to_string(Phase p) { return p == Phase::kPrefill ? "prefill" : "generation"; }

OperatorCost simulate_operator(const OperatorShape& s, const ArchConfig& arch, Phase phase) {
  if (s.rows == 0) throw InvalidArgument("simulate_operator: rows must be >= 1");
  const std::uint64_t eb = arch.memory.element_bytes;
  const std::uint64_t half_buffer = arch.memory.on_chip_buffer_bytes / 2;
  OperatorCost c;
  c.invocations = s.rows;
  std::uint64_t bytes = s.extra_bytes;

  switch (s.kind) {
    case OperatorKind::kQkvGen:
    case OperatorKind::kProjection:
    case OperatorKind::kFfn1:
    case OperatorKind::kFfn2: {
      if (s.k == 0 || s.n == 0) throw InvalidArgument("simulate_operator: GEMV needs k, n >= 1");
      c.compute_cycles = s.rows * gemv_cycles(arch, default_interpretation(s.kind), s.k, s.n);
      c.overhead_cycles = s.rows * arch.op_overhead_cycles;
      c.macs = s.rows * s.k * s.n;
      const std::uint64_t weight_bytes = s.k * s.n * eb;
      // Generation streams weights once per token. Prefill buffers them and
      // re-fetches once per token chunk whose activations fill half the buffer.
      const std::uint64_t fetches = phase == Phase::kGeneration ? s.rows : ceil_div(s.rows * s.k * eb, half_buffer);
      bytes += weight_bytes * fetches;
      break;
    }
    case OperatorKind::kScore:
    case OperatorKind::kContext: {
      const bool score = s.kind == OperatorKind::kScore;
      const std::uint64_t d = score ? s.k : s.n;
      if (d == 0) throw InvalidArgument("simulate_operator: attention needs a head dimension");
      auto one = [&](std::uint64_t l) {
        return score ? gemv_cycles(arch, Interpretation::kInner, d, l)
                     : gemv_cycles(arch, Interpretation::kOuter, l, d);
      };
      if (s.causal) {
        for (std::uint64_t t = 1; t <= s.rows; ++t) {
          c.compute_cycles += one(causal_extent(arch, t, s.rows));
          c.macs += t * d;
        }
        // K (or V) tile of the head stays on chip; it is re-read once per
        // query chunk that fills the other half of the buffer.
        const std::uint64_t kv = s.rows * d * eb;
        bytes += kv * ceil_div(s.rows * d * eb, half_buffer);
      } else {
        if (s.length == 0) throw InvalidArgument("simulate_operator: attention length must be >= 1");
        c.compute_cycles = s.rows * one(s.length);
        c.macs = s.rows * s.length * d;
        bytes += s.rows * s.length * d * eb;
      }
      c.overhead_cycles = s.rows * arch.op_overhead_cycles;
      break;
    }
    case OperatorKind::kSoftmax:
      if (s.causal) {
        for (std::uint64_t t = 1; t <= s.rows; ++t) c.compute_cycles += sfu_latency(SfuOp::kSoftmax, t, arch.sfu);
      } else {
        c.compute_cycles = s.rows * sfu_latency(SfuOp::kSoftmax, s.length, arch.sfu);
      }
      break;
    case OperatorKind::kLayerNorm:
      c.compute_cycles = s.rows * sfu_latency(SfuOp::kLayerNorm, s.length, arch.sfu);
      break;
    case OperatorKind::kActivation:
    case OperatorKind::kResidual:
      c.compute_cycles = s.rows * ceil_div(s.length, arch.elementwise_per_cycle);
      break;
    case OperatorKind::kVoting:
      // Off the critical path: only the tally traffic is recorded.
      c.invocations = s.rows;
      c.bytes = bytes;
      return c;
  }
  c.bytes = bytes;
  c.memory_cycles = memory_cycles(bytes, arch.memory);
  c.cycles = std::max(c.compute_cycles, c.memory_cycles) + c.overhead_cycles;
  return c;
}

std::uint64_t PhaseReport::attention_cycles() const noexcept {
  return op(OperatorKind::kScore).cycles + op(OperatorKind::kSoftmax).cycles + op(OperatorKind::kContext).cycles;
}

double CycleReport::mean_step_attention_cycles() const {
  if (step_attention_cycles.empty()) throw InvalidState("no generation steps in report");
  double sum = 0.0;
  for (auto c : step_attention_cycles) sum += static_cast<double>(c);
  return sum / static_cast<double>(step_attention_cycles.size());
}

std::uint64_t attention_step_cycles(const WorkloadConfig& w, const ArchConfig& arch, std::uint64_t length) {
  const auto head = head_attention(w, arch, length);
  return static_cast<std::uint64_t>(w.layers) * w.heads * (head[0].cycles + head[1].cycles + head[2].cycles);
}

CycleReport simulate_prefill(const WorkloadConfig& w, const ArchConfig& arch) {
  w.validate();
  arch.validate();
  CycleReport r;
  r.arch = arch.name;
  r.peak_macs_per_cycle = arch.peak_macs_per_cycle();
  r.frequency_hz = arch.frequency_hz;

  const std::uint64_t p = w.prompt_len;
  const std::uint64_t layers = w.layers;
  add_fixed_ops(r.prefill, layer_plan(w, p), w, arch, Phase::kPrefill, p, layers);
  const std::uint64_t per_head = layers * w.heads;
  accumulate(r.prefill.ops[op_index(OperatorKind::kScore)],
             simulate_operator({OperatorKind::kScore, w.head_dim, 0, 0, p, true, 0}, arch, Phase::kPrefill), per_head);
  accumulate(r.prefill.ops[op_index(OperatorKind::kSoftmax)],
             simulate_operator({OperatorKind::kSoftmax, 0, 0, 0, p, true, 0}, arch, Phase::kPrefill), per_head);
  accumulate(r.prefill.ops[op_index(OperatorKind::kContext)],
             simulate_operator({OperatorKind::kContext, 0, w.head_dim, 0, p, true, 0}, arch, Phase::kPrefill), per_head);
  if (w.eviction) {
    std::uint64_t tally = 0;
    for (std::uint64_t t = w.eviction->reserved + 1; t <= p; ++t) tally += vote_bytes(t);
    accumulate(r.prefill.ops[op_index(OperatorKind::kVoting)],
               simulate_operator({OperatorKind::kVoting, 0, 0, 0, p, false, tally}, arch, Phase::kPrefill), layers);
  }
  finalize(r.prefill);
  r.prefill_utilization = utilization_of(r.prefill, r.peak_macs_per_cycle);
  return r;
}

CycleReport simulate_generation(const WorkloadConfig& w, const ArchConfig& arch) {
  w.validate();
  arch.validate();
  if (w.gen_len == 0) throw InvalidConfiguration("workload: generation length must be >= 1");
  CycleReport r;
  r.arch = arch.name;
  r.peak_macs_per_cycle = arch.peak_macs_per_cycle();
  r.frequency_hz = arch.frequency_hz;

  const std::uint64_t layers = w.layers;
  PhaseReport fixed;
  add_fixed_ops(fixed, layer_plan(w, 1), w, arch, Phase::kGeneration, 1, 1);
  finalize(fixed);
  const std::uint64_t fixed_per_step = fixed.cycles * layers;
  for (std::size_t i = 0; i < kNumOperators; ++i) {
    const auto& f = fixed.ops[i];
    const OperatorCost per_step{f.compute_cycles, f.memory_cycles, f.overhead_cycles, f.cycles,
                                f.bytes,          f.macs,          f.invocations};
    accumulate(r.generation.ops[i], per_step, layers * w.gen_len);
  }

  std::optional<std::size_t> target;
  if (w.eviction) target = eviction::target_size(w.prompt_len, *w.eviction);

  r.step_cycles.reserve(w.gen_len);
  r.step_attention_cycles.reserve(w.gen_len);
  r.step_lengths.reserve(w.gen_len);
  for (std::size_t g = 1; g <= w.gen_len; ++g) {
    const std::uint64_t l = eviction::generation_attention_length(w.prompt_len, g, target);
    const auto head = head_attention(w, arch, l);
    const std::uint64_t times = layers * w.heads;
    accumulate(r.generation.ops[op_index(OperatorKind::kScore)], head[0], times);
    accumulate(r.generation.ops[op_index(OperatorKind::kSoftmax)], head[1], times);
    accumulate(r.generation.ops[op_index(OperatorKind::kContext)], head[2], times);
    const std::uint64_t attention = times * (head[0].cycles + head[1].cycles + head[2].cycles);
    if (w.eviction) {
      accumulate(r.generation.ops[op_index(OperatorKind::kVoting)],
                 simulate_operator({OperatorKind::kVoting, 0, 0, 0, 1, false, vote_bytes(l)}, arch,
                                   Phase::kGeneration),
                 layers);
    }
    r.step_lengths.push_back(l);
    r.step_attention_cycles.push_back(attention);
    r.step_cycles.push_back(fixed_per_step + attention);
  }
  finalize(r.generation);
  r.generation_utilization = utilization_of(r.generation, r.peak_macs_per_cycle);
  r.tokens_per_s = arch.frequency_hz * static_cast<double>(w.gen_len) / static_cast<double>(r.generation.cycles);
  return r;
}

CycleReport simulate(const WorkloadConfig& w, const ArchConfig& arch) {
  CycleReport r = simulate_prefill(w, arch);
  if (w.gen_len > 0) {
    CycleReport g = simulate_generation(w, arch);
    r.generation = g.generation;
    r.step_cycles = std::move(g.step_cycles);
    r.step_attention_cycles = std::move(g.step_attention_cycles);
    r.step_lengths = std::move(g.step_lengths);
    r.tokens_per_s = g.tokens_per_s;
    r.generation_utilization = g.generation_utilization;
  }
  return r;
}

CycleReport simulate_baseline(const WorkloadConfig& w, const ArchConfig& arch_baseline) {
  if (arch_baseline.dataflow != DataflowKind::kFixedTree) {
    throw InvalidConfiguration("simulate_baseline: architecture must use the fixed tree");
  }
  if (arch_baseline.sfu.mode != SfuMode::kConventional) {
    throw InvalidConfiguration("simulate_baseline: baseline SFU must be conventional");
  }
  return simulate(w, arch_baseline);
}

}  // namespace veda::cyclesim
