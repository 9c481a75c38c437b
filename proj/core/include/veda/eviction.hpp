// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Voting-based KV-cache eviction with accumulated-score (H2O-style) and
// sliding-window baselines. One KVCacheState per layer; all heads of a layer
// share one vote tally.
//
// Step protocol: a step for token t receives one score row per head, each
// spanning the live positions *plus* t, in live order. The token is appended,
// votes are cast, then (generation only) at most one position is evicted.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "veda/numcore.hpp"

namespace veda::eviction {

/// Original 1-based token index.
using Position = std::uint32_t;

struct EvictionConfig {
  double ratio = 1.0;            // compression ratio r, (0, 1]
  std::size_t reserved = 32;     // R: leading positions exempt from votes and eviction
  double coeff_a = 1.0;          // threshold = a * mean - b * std
  double coeff_b = 0.2;
  std::optional<std::size_t> explicit_target;
  std::size_t num_heads = 1;

  /// Throws InvalidArgument on out-of-domain fields.
  void validate() const;
};

enum class Phase : std::uint8_t { kPrefillReserved, kPrefillVoting, kGeneration };

std::string_view to_string(Phase phase);

struct ScoreRow {
  numcore::DenseVector scores;
  std::size_t head_index = 0;
};

class KVCacheState {
 public:
  KVCacheState(std::size_t reserved_limit, std::size_t target);

  const std::vector<Position>& live_positions() const noexcept { return live_; }
  std::size_t size() const noexcept { return live_.size(); }
  bool empty() const noexcept { return live_.empty(); }

  std::size_t reserved_limit() const noexcept { return reserved_limit_; }
  /// Number of leading live entries that are reserved: min(R, size).
  std::size_t reserved_count() const noexcept;
  bool is_eligible(std::size_t live_index) const noexcept { return live_index >= reserved_count(); }
  std::size_t eligible_count() const noexcept { return size() - reserved_count(); }

  /// Vote counts (voting) or accumulated attention (H2O), aligned with
  /// live_positions().
  std::span<const double> tallies() const noexcept { return tallies_; }
  double tally_of(Position p) const;
  std::optional<std::size_t> index_of(Position p) const;

  std::size_t target() const noexcept { return target_; }
  Phase phase() const noexcept { return phase_; }
  /// Tokens admitted so far; the next token is Position(steps() + 1).
  std::size_t steps() const noexcept { return steps_; }
  Position next_position() const noexcept { return static_cast<Position>(steps_ + 1); }

  void admit_next();
  void evict_at(std::size_t live_index);
  void add_tally(std::size_t live_index, double delta);
  void set_phase(Phase phase) noexcept { phase_ = phase; }

 private:
  std::size_t reserved_limit_;
  std::size_t target_;
  Phase phase_ = Phase::kPrefillReserved;
  std::size_t steps_ = 0;
  std::vector<Position> live_;
  std::vector<double> tallies_;
};

/// explicit_target if set, else max(R + 1, ceil(r * P)).
std::size_t target_size(std::size_t prompt_len, const EvictionConfig& cfg);

/// a * mean(scores) - b * std(scores), with streaming moments.
double adaptive_threshold(std::span<const double> scores, const EvictionConfig& cfg);
double adaptive_threshold(const ScoreRow& row, const EvictionConfig& cfg);

/// Per-head indicator over live positions: strictly below threshold, or the
/// minimum score(s) when the threshold is not positive. Reserved entries never
/// receive an indicator.
std::vector<std::uint8_t> vote_indicators(std::span<const double> scores,
                                          std::size_t reserved_count,
                                          const EvictionConfig& cfg);

/// Adds the head-averaged indicator to each live position's tally and returns
/// the increments (aligned with live_positions()).
std::vector<double> cast_votes(KVCacheState& state, std::span<const ScoreRow> rows,
                               const EvictionConfig& cfg);

/// Eligible position with the highest vote count; earliest on ties.
Position select_eviction(const KVCacheState& state);

KVCacheState make_state(std::size_t prompt_len, const EvictionConfig& cfg);

void prefill_step(KVCacheState& state, std::span<const ScoreRow> rows,
                  std::size_t step_index, const EvictionConfig& cfg);

/// Evicts by vote until the cache fits the target; returns evictions in order.
std::vector<Position> transition_to_generation(KVCacheState& state, const EvictionConfig& cfg);

std::optional<Position> generation_step(KVCacheState& state, std::span<const ScoreRow> rows,
                                        const EvictionConfig& cfg);

// Accumulated-attention baseline: tallies hold the sum over heads and steps of
// raw scores; the eligible minimum is evicted (earliest on ties).
void h2o_prefill_step(KVCacheState& state, std::span<const ScoreRow> rows,
                      std::size_t step_index, const EvictionConfig& cfg);
std::vector<Position> h2o_transition(KVCacheState& state, const EvictionConfig& cfg);
std::optional<Position> h2o_step(KVCacheState& state, std::span<const ScoreRow> rows,
                                 const EvictionConfig& cfg);
Position select_min_accumulated(const KVCacheState& state);

// Sliding window with attention-sink prefix: keeps R earliest plus the most
// recent (S - R) positions.
void sliding_window_prefill_step(KVCacheState& state, std::size_t step_index);
std::vector<Position> sliding_window_transition(KVCacheState& state);
std::optional<Position> sliding_window_step(KVCacheState& state, const EvictionConfig& cfg);

/// Live length seen by attention at generation step `step` (1-based) when a
/// target is enforced: the new token is admitted before eviction.
std::size_t generation_attention_length(std::size_t prompt_len, std::size_t step,
                                        std::optional<std::size_t> target);

}  // namespace veda::eviction
