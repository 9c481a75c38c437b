// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Functional GEMV under the inner- and outer-product interpretations, the
// position-major KV layout used by both attention GEMVs, and the mapping of a
// GEMV onto a lane-parallel engine as a cycle plan.
//
// Element-serial contract: inner-product GEMVs emit output elements in index
// order through an ElementSink; outer-product GEMVs pull input elements in
// index order from an ElementSource. These hooks are where the SFU reduction
// and normalization stages attach.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "veda/numcore.hpp"

namespace veda::dataflow {

using numcore::DenseMatrix;
using numcore::DenseVector;

enum class Interpretation : std::uint8_t { kInner, kOuter };

std::string_view to_string(Interpretation interp);

/// (1,k) x (k,n) = (1,n)
struct GemvProblem {
  std::uint64_t k = 1;
  std::uint64_t n = 1;
};

using ElementSink = std::function<void(std::size_t index, double value)>;
using ElementSource = std::function<double(std::size_t index)>;

/// K or V cache stored as (l, d): one token position per address row. Only
/// row access is exposed, so no kernel can materialize a (d, l) transpose.
class KVLayout {
 public:
  explicit KVLayout(std::size_t head_dim);
  KVLayout(std::size_t head_dim, const DenseMatrix& rows);

  std::size_t length() const noexcept { return rows_; }
  std::size_t head_dim() const noexcept { return head_dim_; }

  void append(std::span<const double> row);
  std::span<const double> row(std::size_t address) const;

 private:
  std::size_t head_dim_;
  std::size_t rows_ = 0;
  std::vector<double> storage_;
};

DenseVector inner_product_gemv(const DenseVector& x, const DenseMatrix& w,
                               const ElementSink& sink = {});

/// Pulls x[0..k) from `source` one element per step.
DenseVector outer_product_gemv(const ElementSource& source, const DenseMatrix& w);
DenseVector outer_product_gemv(const DenseVector& x, const DenseMatrix& w);

/// s[j] = <q, K[j]>; s is emitted serially (inner product over d, l steps).
DenseVector qk_scores(const DenseVector& q, const KVLayout& keys,
                      const ElementSink& sink = {});

/// o = sum_j s'[j] * V[j]; s' is consumed serially (outer product, l steps).
DenseVector sv_output(const ElementSource& weights, const KVLayout& values);
DenseVector sv_output(const DenseVector& weights, const KVLayout& values);

/// One attention head computed with element-serial scheduling: q.K^T
/// streams scores into a running softmax reduction, then the normalization
/// feeds s'.V element by element. `scale` multiplies raw scores.
struct HeadAttention {
  DenseVector probabilities;
  DenseVector output;
};
HeadAttention attend_element_serial(const DenseVector& q, const KVLayout& keys,
                                    const KVLayout& values, double scale);

struct GemvSchedule {
  Interpretation interpretation = Interpretation::kInner;
  GemvProblem problem;
  std::uint32_t lanes_available = 1;
  // Spatial dimension (k for inner, n for outer) split into passes of
  // lanes_available; the temporal dimension (n for inner, k for outer) maps to
  // cycles within a pass.
  std::uint64_t passes = 1;
  std::uint64_t total_cycles = 1;
  double utilization = 1.0;

  std::uint64_t spatial_extent() const noexcept;
  std::uint64_t temporal_extent() const noexcept;
  /// Lanes driven during pass p (the last pass may be partial).
  std::uint32_t lanes_in_pass(std::uint64_t pass) const;
};

/// Flexible mapping onto `lanes` multipliers.
///   inner: passes = ceil(k/lanes), cycles = n * passes
///   outer: passes = ceil(n/lanes), cycles = k * passes
GemvSchedule make_schedule(GemvProblem p, Interpretation interp, std::uint32_t lanes);

/// Fixed-width multiplier array + adder tree, inner product only. One pass
/// of the tree per cycle at its native rate.
GemvSchedule fixed_tree_schedule(GemvProblem p, std::uint32_t tree_width);

}  // namespace veda::dataflow
