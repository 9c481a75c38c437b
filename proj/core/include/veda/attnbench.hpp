// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Desk-scale quality harness for eviction policies. Attention traces come
// either from a small seeded causal model or from hand-built scenarios that
// isolate one failure mode of score accumulation. Quality is the retained
// attention mass: the share of the full-cache distribution that falls on the
// positions a policy still holds when the token attends.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veda/numcore.hpp"
#include "veda/policy.hpp"

namespace veda::attnbench {

struct ToyModelConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t head_dim = 16;
  std::size_t hidden = 64;  // heads * head_dim
  std::size_t seq_len = 256;
  std::uint64_t seed = 1;
  std::size_t vocab = 64;
  std::size_t heavy_hitter_tokens = 4;  // vocabulary ids 1..n get a boosted key
  double heavy_hitter_boost = 2.5;      // mean logit lift for those tokens
  double sink_boost = 3.0;              // mean logit lift for the leading token (id 0)
  double recency_slope = 0.25;          // head h penalizes distance by slope * 4^-h

  void validate() const;
};

/// Per step t (1-based), layer and head: the full-cache attention
/// distribution over positions 1..t, stored as float.
class AttentionTrace {
 public:
  struct Meta {
    std::string name;
    std::string kind;  // "toy" or a scenario kind
    std::uint64_t seed = 0;
    std::size_t layers = 1;
    std::size_t heads = 1;
    std::size_t steps = 0;
    std::map<std::string, std::string> params;
  };

  AttentionTrace() = default;
  explicit AttentionTrace(Meta meta);

  const Meta& meta() const noexcept { return meta_; }
  std::size_t steps() const noexcept { return meta_.steps; }
  std::size_t layers() const noexcept { return meta_.layers; }
  std::size_t heads() const noexcept { return meta_.heads; }

  std::span<const float> row(std::size_t step, std::size_t layer, std::size_t head) const;
  std::span<float> row(std::size_t step, std::size_t layer, std::size_t head);

  std::span<const float> raw() const noexcept { return scores_; }

  friend bool operator==(const AttentionTrace& a, const AttentionTrace& b);

 private:
  std::size_t offset(std::size_t step, std::size_t layer, std::size_t head) const;

  Meta meta_;
  std::vector<float> scores_;
};

/// Seeded toy causal model. Exposes its query/key vectors so distributions
/// can be recomputed independently.
class ToyModel {
 public:
  explicit ToyModel(const ToyModelConfig& cfg);

  const ToyModelConfig& config() const noexcept { return cfg_; }
  const std::vector<std::uint32_t>& tokens() const noexcept { return tokens_; }

  numcore::DenseVector query(std::size_t layer, std::size_t head, std::size_t step) const;
  numcore::DenseVector key(std::size_t layer, std::size_t head, std::size_t position) const;
  double recency_slope(std::size_t head) const;
  double logit_scale() const;

  AttentionTrace trace() const;

 private:
  numcore::DenseVector project(const std::vector<double>& weights, std::size_t layer,
                               std::size_t head, std::size_t position) const;

  ToyModelConfig cfg_;
  std::vector<std::uint32_t> tokens_;
  std::vector<double> embeddings_;  // vocab x hidden
  std::vector<double> w_query_;     // layers x heads x head_dim x hidden
  std::vector<double> w_key_;
  std::vector<double> query_bias_;  // layers x heads x head_dim, |bias| = sqrt(head_dim)
};

AttentionTrace gen_toy_trace(const ToyModelConfig& cfg);

enum class ScenarioKind : std::uint8_t { kItemCount, kCriteria, kOutlier, kSink, kRecency };

std::string_view to_string(ScenarioKind kind);
ScenarioKind scenario_from_string(std::string_view name);
std::vector<ScenarioKind> all_scenarios();

struct ScenarioParams {
  std::size_t seq_len = 256;
  std::size_t heads = 4;
  std::uint64_t seed = 1;
  double noise = 0.3;  // multiplicative log-normal jitter on every weight
};

/// Hand-built distributions, one layer. Weights are a mix of a uniform floor,
/// per-head recency decay, leading sinks, persistent heavy hitters and a
/// transient outlier; each kind emphasizes one of them.
AttentionTrace gen_bias_scenario(ScenarioKind kind, const ScenarioParams& params);

struct EvictionEvent {
  std::size_t step;
  std::size_t layer;
  eviction::Position position;

  friend bool operator==(const EvictionEvent&, const EvictionEvent&) = default;
};

struct PolicyRun {
  eviction::PolicyKind policy = eviction::PolicyKind::kVoting;
  eviction::EvictionConfig config;
  std::size_t prompt_len = 0;
  std::size_t target = 0;
  std::vector<double> retained_mass;  // per step, averaged over layers and heads
  double mean_mass = 0.0;
  double min_mass = 0.0;
  std::vector<EvictionEvent> evictions;
};

struct QualityReport {
  std::string trace_name;
  std::vector<PolicyRun> runs;
};

/// Steps 1..prompt_len are prefill, the rest generation. The policy sees each
/// step's rows restricted to its live set and renormalized; the metric uses
/// the unrenormalized full-cache distribution. config.num_heads must match
/// the trace.
PolicyRun replay_policy(const AttentionTrace& trace, eviction::PolicyKind policy,
                        const eviction::EvictionConfig& config, std::size_t prompt_len);

QualityReport replay_policies(const AttentionTrace& trace,
                              std::span<const eviction::PolicyKind> policies,
                              const eviction::EvictionConfig& config, std::size_t prompt_len);

struct ComparisonRow {
  std::string trace;
  eviction::PolicyKind policy;
  double ratio;
  std::size_t target;
  double mean_mass;
  double min_mass;
};

/// Every (trace, ratio, policy) combination, in that nesting order. `base`
/// supplies R, a and b; ratio and num_heads are overridden per row.
std::vector<ComparisonRow> compare_policies(std::span<const AttentionTrace> traces,
                                            std::span<const eviction::PolicyKind> policies,
                                            std::span<const double> ratios,
                                            const eviction::EvictionConfig& base,
                                            std::size_t prompt_len);

// Binary trace file: "VEDATRC1", u32 header length, JSON header (name, kind,
// seed, layers, heads, steps, params), then for each step, layer and head a
// u32 element count followed by that many float32 values. All integers and
// floats little-endian.
void write_trace(const AttentionTrace& trace, const std::filesystem::path& path);
AttentionTrace read_trace(const std::filesystem::path& path);

std::string serialize_trace(const AttentionTrace& trace);
AttentionTrace deserialize_trace(std::string_view bytes);

}  // namespace veda::attnbench
