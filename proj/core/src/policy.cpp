// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "veda/policy.hpp"

#include <limits>
#include <string>

#include "veda/error.hpp"

namespace veda::eviction {
namespace {

class VotingPolicy final : public Policy {
 public:
  VotingPolicy(KVCacheState s, EvictionConfig c) : Policy(std::move(s), c) {}
  PolicyKind kind() const noexcept override { return PolicyKind::kVoting; }
  void prefill(std::span<const ScoreRow> rows) override {
    prefill_step(state_, rows, state_.next_position(), cfg_);
  }
  std::vector<Position> begin_generation() override { return transition_to_generation(state_, cfg_); }
  std::optional<Position> generate(std::span<const ScoreRow> rows) override {
    return generation_step(state_, rows, cfg_);
  }
};

class H2OPolicy final : public Policy {
 public:
  H2OPolicy(KVCacheState s, EvictionConfig c) : Policy(std::move(s), c) {}
  PolicyKind kind() const noexcept override { return PolicyKind::kH2O; }
  void prefill(std::span<const ScoreRow> rows) override {
    h2o_prefill_step(state_, rows, state_.next_position(), cfg_);
  }
  std::vector<Position> begin_generation() override { return h2o_transition(state_, cfg_); }
  std::optional<Position> generate(std::span<const ScoreRow> rows) override {
    return h2o_step(state_, rows, cfg_);
  }
};

class SlidingWindowPolicy final : public Policy {
 public:
  SlidingWindowPolicy(KVCacheState s, EvictionConfig c) : Policy(std::move(s), c) {}
  PolicyKind kind() const noexcept override { return PolicyKind::kSlidingWindow; }
  void prefill(std::span<const ScoreRow>) override {
    sliding_window_prefill_step(state_, state_.next_position());
  }
  std::vector<Position> begin_generation() override { return sliding_window_transition(state_); }
  std::optional<Position> generate(std::span<const ScoreRow>) override {
    return sliding_window_step(state_, cfg_);
  }
};

// Target size is irrelevant here; the state never shrinks.
class FullCachePolicy final : public Policy {
 public:
  FullCachePolicy(KVCacheState s, EvictionConfig c) : Policy(std::move(s), c) {}
  PolicyKind kind() const noexcept override { return PolicyKind::kFullCache; }
  void prefill(std::span<const ScoreRow>) override { state_.admit_next(); }
  std::vector<Position> begin_generation() override {
    state_.set_phase(Phase::kGeneration);
    return {};
  }
  std::optional<Position> generate(std::span<const ScoreRow>) override {
    state_.admit_next();
    return std::nullopt;
  }
};

class ReservedOnlyPolicy final : public Policy {
 public:
  ReservedOnlyPolicy(KVCacheState s, EvictionConfig c) : Policy(std::move(s), c) {}
  PolicyKind kind() const noexcept override { return PolicyKind::kReservedOnly; }
  void prefill(std::span<const ScoreRow>) override { state_.admit_next(); }
  std::vector<Position> begin_generation() override {
    std::vector<Position> evicted;
    while (state_.eligible_count() > 0) {
      evicted.push_back(state_.live_positions()[state_.reserved_count()]);
      state_.evict_at(state_.reserved_count());
    }
    state_.set_phase(Phase::kGeneration);
    return evicted;
  }
  std::optional<Position> generate(std::span<const ScoreRow>) override {
    state_.admit_next();
    std::optional<Position> evicted;
    while (state_.eligible_count() > 0) {
      evicted = state_.live_positions()[state_.reserved_count()];
      state_.evict_at(state_.reserved_count());
    }
    return evicted;
  }
};

}  // namespace

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kVoting: return "voting";
    case PolicyKind::kH2O: return "h2o";
    case PolicyKind::kSlidingWindow: return "sliding-window";
    case PolicyKind::kFullCache: return "full-cache";
    case PolicyKind::kReservedOnly: return "reserved-only";
  }
  return "unknown";
}

PolicyKind policy_from_string(std::string_view name) {
  for (auto kind : {PolicyKind::kVoting, PolicyKind::kH2O, PolicyKind::kSlidingWindow,
                    PolicyKind::kFullCache, PolicyKind::kReservedOnly}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidArgument("unknown eviction policy '" + std::string(name) + "'");
}

std::unique_ptr<Policy> make_policy(PolicyKind kind, const EvictionConfig& cfg,
                                    std::size_t prompt_len) {
  cfg.validate();
  switch (kind) {
    case PolicyKind::kVoting:
      return std::make_unique<VotingPolicy>(make_state(prompt_len, cfg), cfg);
    case PolicyKind::kH2O:
      return std::make_unique<H2OPolicy>(make_state(prompt_len, cfg), cfg);
    case PolicyKind::kSlidingWindow:
      return std::make_unique<SlidingWindowPolicy>(make_state(prompt_len, cfg), cfg);
    case PolicyKind::kFullCache:
      return std::make_unique<FullCachePolicy>(
          KVCacheState(cfg.reserved, std::numeric_limits<std::size_t>::max()), cfg);
    case PolicyKind::kReservedOnly:
      return std::make_unique<ReservedOnlyPolicy>(KVCacheState(cfg.reserved, cfg.reserved + 1), cfg);
  }
  throw InvalidArgument("make_policy: unknown policy kind");
}

}  // namespace veda::eviction
