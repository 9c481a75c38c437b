// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "veda/eviction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "veda/error.hpp"

namespace veda::eviction {
namespace {

void require_phase_prefill(const KVCacheState& state, const char* op) {
  if (state.phase() == Phase::kGeneration) {
    throw InvalidState(std::string(op) + ": cache is already in the generation phase");
  }
}

void require_phase_generation(const KVCacheState& state, const char* op) {
  if (state.phase() != Phase::kGeneration) {
    throw InvalidState(std::string(op) + ": cache is not in the generation phase");
  }
}

void require_step_index(const KVCacheState& state, std::size_t step_index, const char* op) {
  if (step_index != state.next_position()) {
    throw InvalidArgument(std::string(op) + ": step_index " + std::to_string(step_index) +
                          " does not follow the admitted tokens");
  }
}

// Rows cover the live set after the pending token is admitted.
void require_rows(const KVCacheState& state, std::span<const ScoreRow> rows,
                  const EvictionConfig& cfg, const char* op) {
  if (rows.size() != cfg.num_heads) {
    throw InvalidArgument(std::string(op) + ": expected one score row per head");
  }
  for (const auto& row : rows) {
    if (row.scores.size() != state.size()) {
      throw InvalidArgument(std::string(op) + ": score row length " +
                            std::to_string(row.scores.size()) + " != live length " +
                            std::to_string(state.size()));
    }
  }
}

bool token_votes(std::size_t step_index, const EvictionConfig& cfg) {
  return step_index > cfg.reserved;
}

void accumulate_scores(KVCacheState& state, std::span<const ScoreRow> rows) {
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < state.size(); ++i) {
      if (state.is_eligible(i)) state.add_tally(i, row.scores[i]);
    }
  }
}

}  // namespace

void EvictionConfig::validate() const {
  if (!(ratio > 0.0) || ratio > 1.0) throw InvalidArgument("eviction: ratio must be in (0, 1]");
  if (num_heads == 0) throw InvalidArgument("eviction: num_heads must be positive");
  if (!std::isfinite(coeff_a) || !std::isfinite(coeff_b)) {
    throw InvalidArgument("eviction: threshold coefficients must be finite");
  }
  if (explicit_target && *explicit_target <= reserved) {
    throw InvalidArgument("eviction: explicit target must exceed the reserved length");
  }
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kPrefillReserved: return "prefill-reserved";
    case Phase::kPrefillVoting: return "prefill-voting";
    case Phase::kGeneration: return "generation";
  }
  return "unknown";
}

KVCacheState::KVCacheState(std::size_t reserved_limit, std::size_t target)
    : reserved_limit_(reserved_limit), target_(target) {
  if (target_ == 0) throw InvalidArgument("KVCacheState: target must be positive");
}

std::size_t KVCacheState::reserved_count() const noexcept {
  return std::min(reserved_limit_, live_.size());
}

double KVCacheState::tally_of(Position p) const {
  const auto idx = index_of(p);
  return idx ? tallies_[*idx] : 0.0;
}

std::optional<std::size_t> KVCacheState::index_of(Position p) const {
  const auto it = std::lower_bound(live_.begin(), live_.end(), p);
  if (it == live_.end() || *it != p) return std::nullopt;
  return static_cast<std::size_t>(it - live_.begin());
}

void KVCacheState::admit_next() {
  ++steps_;
  live_.push_back(static_cast<Position>(steps_));
  tallies_.push_back(0.0);
}

void KVCacheState::evict_at(std::size_t live_index) {
  if (live_index >= live_.size()) throw InvalidArgument("evict_at: index out of range");
  if (!is_eligible(live_index)) throw InvalidState("evict_at: reserved positions are never evicted");
  live_.erase(live_.begin() + static_cast<std::ptrdiff_t>(live_index));
  tallies_.erase(tallies_.begin() + static_cast<std::ptrdiff_t>(live_index));
}

void KVCacheState::add_tally(std::size_t live_index, double delta) {
  tallies_.at(live_index) += delta;
}

std::size_t target_size(std::size_t prompt_len, const EvictionConfig& cfg) {
  if (prompt_len == 0) throw InvalidArgument("target_size: prompt length must be >= 1");
  if (cfg.explicit_target) return *cfg.explicit_target;
  const auto scaled = static_cast<std::size_t>(std::ceil(cfg.ratio * static_cast<double>(prompt_len) - 1e-9));
  return std::max(cfg.reserved + 1, scaled);
}

double adaptive_threshold(std::span<const double> scores, const EvictionConfig& cfg) {
  if (scores.empty()) throw InvalidArgument("adaptive_threshold: empty score row");
  const auto moments = numcore::streaming_moments_finalize(
      numcore::streaming_moments_update(numcore::MomentStats{}, scores));
  return cfg.coeff_a * moments.mean - cfg.coeff_b * moments.stddev;
}

double adaptive_threshold(const ScoreRow& row, const EvictionConfig& cfg) {
  return adaptive_threshold(row.scores.data(), cfg);
}

std::vector<std::uint8_t> vote_indicators(std::span<const double> scores,
                                          std::size_t reserved_count,
                                          const EvictionConfig& cfg) {
  std::vector<std::uint8_t> marks(scores.size(), 0);
  if (reserved_count >= scores.size()) return marks;

  const double threshold = adaptive_threshold(scores, cfg);
  if (threshold > 0.0) {
    for (std::size_t i = reserved_count; i < scores.size(); ++i) {
      if (scores[i] < threshold) marks[i] = 1;
    }
    return marks;
  }
  // Non-positive threshold: nothing is strictly below it, vote the minimum.
  const double min_score =
      *std::min_element(scores.begin() + static_cast<std::ptrdiff_t>(reserved_count), scores.end());
  for (std::size_t i = reserved_count; i < scores.size(); ++i) {
    if (scores[i] == min_score) marks[i] = 1;
  }
  return marks;
}

std::vector<double> cast_votes(KVCacheState& state, std::span<const ScoreRow> rows,
                               const EvictionConfig& cfg) {
  require_rows(state, rows, cfg, "cast_votes");
  std::vector<double> increments(state.size(), 0.0);
  const double weight = 1.0 / static_cast<double>(rows.size());
  for (const auto& row : rows) {
    const auto marks = vote_indicators(row.scores.data(), state.reserved_count(), cfg);
    for (std::size_t i = 0; i < marks.size(); ++i) {
      if (marks[i]) increments[i] += weight;
    }
  }
  for (std::size_t i = 0; i < increments.size(); ++i) {
    if (increments[i] != 0.0) state.add_tally(i, increments[i]);
  }
  return increments;
}

Position select_eviction(const KVCacheState& state) {
  if (state.eligible_count() == 0) throw InvalidState("select_eviction: no eligible position");
  const auto tallies = state.tallies();
  std::size_t best = state.reserved_count();
  for (std::size_t i = best + 1; i < state.size(); ++i) {
    if (tallies[i] > tallies[best]) best = i;
  }
  return state.live_positions()[best];
}

Position select_min_accumulated(const KVCacheState& state) {
  if (state.eligible_count() == 0) throw InvalidState("select_min_accumulated: no eligible position");
  const auto tallies = state.tallies();
  std::size_t best = state.reserved_count();
  for (std::size_t i = best + 1; i < state.size(); ++i) {
    if (tallies[i] < tallies[best]) best = i;
  }
  return state.live_positions()[best];
}

KVCacheState make_state(std::size_t prompt_len, const EvictionConfig& cfg) {
  cfg.validate();
  return KVCacheState(cfg.reserved, target_size(prompt_len, cfg));
}

void prefill_step(KVCacheState& state, std::span<const ScoreRow> rows, std::size_t step_index,
                  const EvictionConfig& cfg) {
  require_phase_prefill(state, "prefill_step");
  require_step_index(state, step_index, "prefill_step");
  state.admit_next();
  require_rows(state, rows, cfg, "prefill_step");
  if (token_votes(step_index, cfg)) {
    state.set_phase(Phase::kPrefillVoting);
    cast_votes(state, rows, cfg);
  }
}

std::vector<Position> transition_to_generation(KVCacheState& state, const EvictionConfig&) {
  require_phase_prefill(state, "transition_to_generation");
  std::vector<Position> evicted;
  while (state.size() > state.target() && state.eligible_count() > 0) {
    const Position victim = select_eviction(state);
    state.evict_at(*state.index_of(victim));
    evicted.push_back(victim);
  }
  state.set_phase(Phase::kGeneration);
  return evicted;
}

std::optional<Position> generation_step(KVCacheState& state, std::span<const ScoreRow> rows,
                                        const EvictionConfig& cfg) {
  require_phase_generation(state, "generation_step");
  state.admit_next();
  require_rows(state, rows, cfg, "generation_step");
  if (token_votes(state.steps(), cfg)) cast_votes(state, rows, cfg);
  if (state.size() <= state.target() || state.eligible_count() == 0) return std::nullopt;
  const Position victim = select_eviction(state);
  state.evict_at(*state.index_of(victim));
  return victim;
}

void h2o_prefill_step(KVCacheState& state, std::span<const ScoreRow> rows, std::size_t step_index,
                      const EvictionConfig& cfg) {
  require_phase_prefill(state, "h2o_prefill_step");
  require_step_index(state, step_index, "h2o_prefill_step");
  state.admit_next();
  require_rows(state, rows, cfg, "h2o_prefill_step");
  accumulate_scores(state, rows);
}

std::vector<Position> h2o_transition(KVCacheState& state, const EvictionConfig&) {
  require_phase_prefill(state, "h2o_transition");
  std::vector<Position> evicted;
  while (state.size() > state.target() && state.eligible_count() > 0) {
    const Position victim = select_min_accumulated(state);
    state.evict_at(*state.index_of(victim));
    evicted.push_back(victim);
  }
  state.set_phase(Phase::kGeneration);
  return evicted;
}

std::optional<Position> h2o_step(KVCacheState& state, std::span<const ScoreRow> rows,
                                 const EvictionConfig& cfg) {
  require_phase_generation(state, "h2o_step");
  state.admit_next();
  require_rows(state, rows, cfg, "h2o_step");
  accumulate_scores(state, rows);
  if (state.size() <= state.target() || state.eligible_count() == 0) return std::nullopt;
  const Position victim = select_min_accumulated(state);
  state.evict_at(*state.index_of(victim));
  return victim;
}

void sliding_window_prefill_step(KVCacheState& state, std::size_t step_index) {
  require_phase_prefill(state, "sliding_window_prefill_step");
  require_step_index(state, step_index, "sliding_window_prefill_step");
  state.admit_next();
}

std::vector<Position> sliding_window_transition(KVCacheState& state) {
  require_phase_prefill(state, "sliding_window_transition");
  std::vector<Position> evicted;
  while (state.size() > state.target() && state.eligible_count() > 0) {
    const std::size_t oldest = state.reserved_count();
    evicted.push_back(state.live_positions()[oldest]);
    state.evict_at(oldest);
  }
  state.set_phase(Phase::kGeneration);
  return evicted;
}

std::optional<Position> sliding_window_step(KVCacheState& state, const EvictionConfig&) {
  require_phase_generation(state, "sliding_window_step");
  state.admit_next();
  if (state.size() <= state.target() || state.eligible_count() == 0) return std::nullopt;
  const std::size_t oldest = state.reserved_count();
  const Position victim = state.live_positions()[oldest];
  state.evict_at(oldest);
  return victim;
}

std::size_t generation_attention_length(std::size_t prompt_len, std::size_t step,
                                        std::optional<std::size_t> target) {
  const std::size_t grown = prompt_len + step;
  if (!target) return grown;
  return std::min(grown, *target + 1);
}

}  // namespace veda::eviction
