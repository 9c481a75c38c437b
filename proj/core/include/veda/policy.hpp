// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "veda/eviction.hpp"

namespace veda::eviction {

enum class PolicyKind : std::uint8_t {
  kVoting,
  kH2O,
  kSlidingWindow,
  kFullCache,
  kReservedOnly,  // keeps the reserved prefix and the current token only
};

std::string_view to_string(PolicyKind kind);
/// Accepts the names produced by to_string; throws InvalidArgument otherwise.
PolicyKind policy_from_string(std::string_view name);

/// One layer's cache under some eviction rule. Rows passed to prefill() and
/// generate() cover state().live_positions() followed by the incoming token.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual PolicyKind kind() const noexcept = 0;
  virtual void prefill(std::span<const ScoreRow> rows) = 0;
  virtual std::vector<Position> begin_generation() = 0;
  virtual std::optional<Position> generate(std::span<const ScoreRow> rows) = 0;

  const KVCacheState& state() const noexcept { return state_; }
  const EvictionConfig& config() const noexcept { return cfg_; }

 protected:
  Policy(KVCacheState state, EvictionConfig cfg) : state_(std::move(state)), cfg_(cfg) {}

  KVCacheState state_;
  EvictionConfig cfg_;
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, const EvictionConfig& cfg,
                                    std::size_t prompt_len);

}  // namespace veda::eviction
