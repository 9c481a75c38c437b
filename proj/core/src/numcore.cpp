// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "veda/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "veda/error.hpp"

namespace veda::numcore {
namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw InvalidArgument(std::string(what) + ": non-finite element");
    }
  }
}

}  // namespace

DenseVector::DenseVector(std::vector<double> values) : values_(std::move(values)) {
  require_finite(values_, "DenseVector");
}

DenseVector::DenseVector(std::initializer_list<double> values)
    : DenseVector(std::vector<double>(values)) {}

DenseVector DenseVector::zeros(std::size_t n) { return filled(n, 0.0); }

DenseVector DenseVector::filled(std::size_t n, double value) {
  return DenseVector(std::vector<double>(n, value));
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw InvalidArgument("DenseMatrix: element count does not match rows*cols");
  }
  require_finite(values_, "DenseMatrix");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

DenseVector softmax_reference(const DenseVector& v) {
  if (v.empty()) throw InvalidArgument("softmax_reference: empty input");
  const double max = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - max);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return DenseVector(std::move(out));
}

DenseVector softmax_reference(const MaskedRow& row) {
  if (row.size() == 0) throw InvalidArgument("softmax_reference: empty input");
  if (row.masked.size() != row.size()) {
    throw InvalidArgument("softmax_reference: mask length mismatch");
  }
  double max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (!row.masked[i]) max = std::max(max, row.values[i]);
  }
  if (!std::isfinite(max)) throw InvalidArgument("softmax_reference: every entry masked");

  std::vector<double> out(row.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row.masked[i]) continue;
    out[i] = std::exp(row.values[i] - max);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return DenseVector(std::move(out));
}

MaskedRow causal_mask_row(const DenseVector& row, std::size_t valid_len) {
  if (valid_len < 1 || valid_len > row.size()) {
    throw InvalidArgument("causal_mask_row: valid_len out of range");
  }
  MaskedRow out{row, std::vector<bool>(row.size(), false)};
  for (std::size_t i = valid_len; i < row.size(); ++i) out.masked[i] = true;
  return out;
}

DenseVector layernorm_reference(const DenseVector& v, const DenseVector& gamma,
                                const DenseVector& beta, double eps) {
  if (v.empty()) throw InvalidArgument("layernorm_reference: empty input");
  if (gamma.size() != v.size() || beta.size() != v.size()) {
    throw InvalidArgument("layernorm_reference: length mismatch");
  }
  if (!(eps > 0.0)) throw InvalidArgument("layernorm_reference: eps must be positive");

  const auto n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= n;
  const double inv_std = 1.0 / std::sqrt(var + eps);

  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = gamma[i] * (v[i] - mean) * inv_std + beta[i];
  }
  return DenseVector(std::move(out));
}

SoftmaxStats streaming_softmax_update(SoftmaxStats stats, std::span<const double> tile) {
  if (tile.empty()) throw InvalidArgument("streaming_softmax_update: empty tile");
  const double tile_max = *std::max_element(tile.begin(), tile.end());
  if (!std::isfinite(tile_max)) {
    throw InvalidArgument("streaming_softmax_update: non-finite element");
  }
  const double new_max = stats.count == 0 ? tile_max : std::max(stats.running_max, tile_max);
  double exp_sum = stats.count == 0 ? 0.0 : stats.running_exp_sum * std::exp(stats.running_max - new_max);
  for (double x : tile) {
    if (!std::isfinite(x)) throw InvalidArgument("streaming_softmax_update: non-finite element");
    exp_sum += std::exp(x - new_max);
  }
  stats.running_max = new_max;
  stats.running_exp_sum = exp_sum;
  stats.count += tile.size();
  return stats;
}

SoftmaxStats streaming_softmax_update(SoftmaxStats stats, double x) {
  return streaming_softmax_update(stats, std::span<const double>(&x, 1));
}

double streaming_softmax_normalize(const SoftmaxStats& stats, double x) {
  if (stats.count == 0 || !(stats.running_exp_sum > 0.0)) {
    throw NumericDomainError("streaming_softmax_normalize: exp_sum is zero");
  }
  return std::exp(x - stats.running_max) / stats.running_exp_sum;
}

MomentStats streaming_moments_update(MomentStats stats, double x) {
  stats.count += 1;
  stats.sum += x;
  stats.sum_sq += x * x;
  return stats;
}

MomentStats streaming_moments_update(MomentStats stats, std::span<const double> xs) {
  for (double x : xs) stats = streaming_moments_update(stats, x);
  return stats;
}

MomentSummary streaming_moments_finalize(const MomentStats& stats) {
  if (stats.count == 0) throw InvalidState("streaming_moments_finalize: no elements consumed");
  const auto n = static_cast<double>(stats.count);
  const double mean = stats.sum / n;
  const double var = std::max(0.0, stats.sum_sq / n - mean * mean);
  return {mean, std::sqrt(var)};
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace veda::numcore
