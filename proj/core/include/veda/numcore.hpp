// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Reference and streaming numerical kernels used by the functional model and
// by the SFU reduction/normalization stages.

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace veda::numcore {

inline constexpr double kDefaultLayerNormEps = 1e-5;

/// Finite real vector. Elements are validated on construction; mutable access
/// through `data()` is unchecked.
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::vector<double> values);
  DenseVector(std::initializer_list<double> values);

  static DenseVector zeros(std::size_t n);
  static DenseVector filled(std::size_t n, double value);

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> data() const noexcept { return values_; }
  std::span<double> data() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  std::vector<double> values_;
};

/// Row-contiguous finite real matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// A score row where trailing (future) positions carry an explicit mask flag
/// rather than a stored -inf.
struct MaskedRow {
  DenseVector values;
  std::vector<bool> masked;

  std::size_t size() const noexcept { return values.size(); }
};

/// Running max / rescaled exp-sum for single-pass softmax.
struct SoftmaxStats {
  double running_max = 0.0;
  double running_exp_sum = 0.0;
  std::uint64_t count = 0;
};

/// Running sum / sum of squares for single-pass layernorm statistics.
struct MomentStats {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

struct MomentSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

DenseVector softmax_reference(const DenseVector& v);
DenseVector softmax_reference(const MaskedRow& row);

/// Marks entries at index >= valid_len as masked. valid_len must be in
/// [1, row.size()].
MaskedRow causal_mask_row(const DenseVector& row, std::size_t valid_len);

DenseVector layernorm_reference(const DenseVector& v, const DenseVector& gamma,
                                const DenseVector& beta,
                                double eps = kDefaultLayerNormEps);

SoftmaxStats streaming_softmax_update(SoftmaxStats stats, std::span<const double> tile);
SoftmaxStats streaming_softmax_update(SoftmaxStats stats, double x);

/// exp(x - running_max) / running_exp_sum. Throws NumericDomainError when the
/// exp-sum is zero.
double streaming_softmax_normalize(const SoftmaxStats& stats, double x);

MomentStats streaming_moments_update(MomentStats stats, double x);
MomentStats streaming_moments_update(MomentStats stats, std::span<const double> xs);

/// Throws InvalidState on an empty accumulator. Negative variance from
/// cancellation is clamped to zero.
MomentSummary streaming_moments_finalize(const MomentStats& stats);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace veda::numcore
