// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "veda/dataflow.hpp"

#include <algorithm>

#include "veda/error.hpp"

namespace veda::dataflow {
namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

std::string_view to_string(Interpretation interp) {
  return interp == Interpretation::kInner ? "inner" : "outer";
}

KVLayout::KVLayout(std::size_t head_dim) : head_dim_(head_dim) {
  if (head_dim_ == 0) throw InvalidArgument("KVLayout: head_dim must be positive");
}

KVLayout::KVLayout(std::size_t head_dim, const DenseMatrix& rows) : KVLayout(head_dim) {
  if (rows.cols() != head_dim_) throw InvalidArgument("KVLayout: column count != head_dim");
  for (std::size_t r = 0; r < rows.rows(); ++r) append(rows.row(r));
}

void KVLayout::append(std::span<const double> row) {
  if (row.size() != head_dim_) throw InvalidArgument("KVLayout::append: row length != head_dim");
  storage_.insert(storage_.end(), row.begin(), row.end());
  ++rows_;
}

std::span<const double> KVLayout::row(std::size_t address) const {
  if (address >= rows_) throw InvalidArgument("KVLayout::row: address out of range");
  return {storage_.data() + address * head_dim_, head_dim_};
}

DenseVector inner_product_gemv(const DenseVector& x, const DenseMatrix& w, const ElementSink& sink) {
  if (x.empty() || x.size() != w.rows()) {
    throw InvalidArgument("inner_product_gemv: x length must equal W rows");
  }
  std::vector<double> out(w.cols(), 0.0);
  // Column j of W against the whole input, one output element per step.
  for (std::size_t j = 0; j < w.cols(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) acc += x[i] * w.at(i, j);
    out[j] = acc;
    if (sink) sink(j, acc);
  }
  return DenseVector(std::move(out));
}

DenseVector outer_product_gemv(const ElementSource& source, const DenseMatrix& w) {
  if (!source) throw InvalidArgument("outer_product_gemv: null source");
  if (w.rows() == 0) throw InvalidArgument("outer_product_gemv: empty weight matrix");
  std::vector<double> out(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double xi = source(i);
    const auto row = w.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) out[j] += xi * row[j];
  }
  return DenseVector(std::move(out));
}

DenseVector outer_product_gemv(const DenseVector& x, const DenseMatrix& w) {
  if (x.empty() || x.size() != w.rows()) {
    throw InvalidArgument("outer_product_gemv: x length must equal W rows");
  }
  return outer_product_gemv([&x](std::size_t i) { return x[i]; }, w);
}

DenseVector qk_scores(const DenseVector& q, const KVLayout& keys, const ElementSink& sink) {
  if (q.size() != keys.head_dim()) throw InvalidArgument("qk_scores: q length != head_dim");
  if (keys.length() == 0) throw InvalidArgument("qk_scores: empty key cache");
  std::vector<double> s(keys.length());
  for (std::size_t j = 0; j < keys.length(); ++j) {
    s[j] = numcore::dot(q.data(), keys.row(j));
    if (sink) sink(j, s[j]);
  }
  return DenseVector(std::move(s));
}

DenseVector sv_output(const ElementSource& weights, const KVLayout& values) {
  if (!weights) throw InvalidArgument("sv_output: null source");
  if (values.length() == 0) throw InvalidArgument("sv_output: empty value cache");
  std::vector<double> o(values.head_dim(), 0.0);
  for (std::size_t j = 0; j < values.length(); ++j) {
    const double w = weights(j);
    const auto row = values.row(j);
    for (std::size_t c = 0; c < row.size(); ++c) o[c] += w * row[c];
  }
  return DenseVector(std::move(o));
}

DenseVector sv_output(const DenseVector& weights, const KVLayout& values) {
  if (weights.size() != values.length()) throw InvalidArgument("sv_output: s' length != cache length");
  return sv_output([&weights](std::size_t j) { return weights[j]; }, values);
}

HeadAttention attend_element_serial(const DenseVector& q, const KVLayout& keys,
                                    const KVLayout& values, double scale) {
  if (keys.length() != values.length()) {
    throw InvalidArgument("attend_element_serial: K and V lengths differ");
  }
  numcore::SoftmaxStats stats;
  std::vector<double> scaled(keys.length());
  qk_scores(q, keys, [&](std::size_t j, double s) {
    scaled[j] = s * scale;
    stats = numcore::streaming_softmax_update(stats, scaled[j]);
  });

  std::vector<double> probs(keys.length());
  auto output = sv_output(
      [&](std::size_t j) {
        probs[j] = numcore::streaming_softmax_normalize(stats, scaled[j]);
        return probs[j];
      },
      values);
  return {DenseVector(std::move(probs)), std::move(output)};
}

std::uint64_t GemvSchedule::spatial_extent() const noexcept {
  return interpretation == Interpretation::kInner ? problem.k : problem.n;
}

std::uint64_t GemvSchedule::temporal_extent() const noexcept {
  return interpretation == Interpretation::kInner ? problem.n : problem.k;
}

std::uint32_t GemvSchedule::lanes_in_pass(std::uint64_t pass) const {
  if (pass >= passes) throw InvalidArgument("GemvSchedule::lanes_in_pass: pass out of range");
  const std::uint64_t remaining = spatial_extent() - pass * lanes_available;
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(remaining, lanes_available));
}

GemvSchedule make_schedule(GemvProblem p, Interpretation interp, std::uint32_t lanes) {
  if (lanes == 0) throw InvalidArgument("make_schedule: lanes must be >= 1");
  if (p.k == 0 || p.n == 0) throw InvalidArgument("make_schedule: k and n must be >= 1");
  GemvSchedule s;
  s.interpretation = interp;
  s.problem = p;
  s.lanes_available = lanes;
  const std::uint64_t spatial = s.spatial_extent();
  s.passes = ceil_div(spatial, lanes);
  s.total_cycles = s.temporal_extent() * s.passes;
  s.utilization = static_cast<double>(spatial) / static_cast<double>(s.passes * lanes);
  return s;
}

GemvSchedule fixed_tree_schedule(GemvProblem p, std::uint32_t tree_width) {
  if (tree_width == 0) throw InvalidArgument("fixed_tree_schedule: tree_width must be >= 1");
  return make_schedule(p, Interpretation::kInner, tree_width);
}

}  // namespace veda::dataflow
