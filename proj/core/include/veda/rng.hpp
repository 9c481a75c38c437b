// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace veda {

/// The project's only randomness source.
///
/// Stream definition (reproducible in any language):
///   engine   std::mt19937_64 seeded with the 64-bit seed
///   uniform  (engine() >> 11) * 2^-53, in [0, 1)
///   normal   Box-Muller: u1 = 1 - uniform(), u2 = uniform(),
///            z = sqrt(-2 ln u1) * cos(2 pi u2); one draw per normal (the
///            sine branch is discarded)
///   index    floor(uniform() * n)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double normal();
  std::uint64_t index(std::uint64_t n);

  /// Derives an independent child seed for a named sub-stream.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

}  // namespace veda
