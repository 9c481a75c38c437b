// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "veda/attnbench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "veda/dataflow.hpp"
#include "veda/error.hpp"
#include "veda/rng.hpp"

namespace veda::attnbench {
namespace {

using eviction::EvictionConfig;
using eviction::PolicyKind;
using eviction::Position;
using numcore::DenseVector;

// Sub-stream ids for Rng::derive.
enum Stream : std::uint64_t { kTokens = 1, kEmbeddings, kQueryWeights, kKeyWeights, kQueryBias, kScenario };

std::vector<double> normals(Rng& rng, std::size_t n, double stddev) {
  std::vector<double> out(n);
  for (double& x : out) x = rng.normal() * stddev;
  return out;
}

}  // namespace

void ToyModelConfig::validate() const {
  if (layers == 0 || heads == 0 || head_dim == 0) {
    throw InvalidArgument("toy model: layers, heads and head_dim must be positive");
  }
  if (hidden != heads * head_dim) throw InvalidArgument("toy model: hidden must equal heads * head_dim");
  if (seq_len == 0) throw InvalidArgument("toy model: seq_len must be >= 1");
  if (vocab < 2 || heavy_hitter_tokens >= vocab) {
    throw InvalidArgument("toy model: vocab must exceed the heavy-hitter token count");
  }
}

AttentionTrace::AttentionTrace(Meta meta) : meta_(std::move(meta)) {
  if (meta_.layers == 0 || meta_.heads == 0) throw InvalidArgument("AttentionTrace: empty geometry");
  const std::size_t per_step = meta_.layers * meta_.heads;
  scores_.assign(per_step * meta_.steps * (meta_.steps + 1) / 2, 0.0F);
}

std::size_t AttentionTrace::offset(std::size_t step, std::size_t layer, std::size_t head) const {
  if (step < 1 || step > meta_.steps || layer >= meta_.layers || head >= meta_.heads) {
    throw InvalidArgument("AttentionTrace::row: index out of range");
  }
  const std::size_t per_step = meta_.layers * meta_.heads;
  // Steps before `step` hold 1 + 2 + ... + (step-1) entries per row.
  return per_step * (step - 1) * step / 2 + (layer * meta_.heads + head) * step;
}

std::span<const float> AttentionTrace::row(std::size_t step, std::size_t layer, std::size_t head) const {
  return {scores_.data() + offset(step, layer, head), step};
}

std::span<float> AttentionTrace::row(std::size_t step, std::size_t layer, std::size_t head) {
  return {scores_.data() + offset(step, layer, head), step};
}

bool operator==(const AttentionTrace& a, const AttentionTrace& b) {
  return a.meta_.name == b.meta_.name && a.meta_.kind == b.meta_.kind && a.meta_.seed == b.meta_.seed &&
         a.meta_.layers == b.meta_.layers && a.meta_.heads == b.meta_.heads &&
         a.meta_.steps == b.meta_.steps && a.meta_.params == b.meta_.params && a.scores_ == b.scores_;
}

ToyModel::ToyModel(const ToyModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng token_rng(Rng::derive(cfg_.seed, kTokens));
  tokens_.resize(cfg_.seq_len);
  tokens_[0] = 0;
  for (std::size_t i = 1; i < cfg_.seq_len; ++i) {
    tokens_[i] = 1 + static_cast<std::uint32_t>(token_rng.index(cfg_.vocab - 1));
  }

  Rng emb_rng(Rng::derive(cfg_.seed, kEmbeddings));
  embeddings_ = normals(emb_rng, cfg_.vocab * cfg_.hidden, 1.0);

  const std::size_t proj = cfg_.layers * cfg_.heads * cfg_.head_dim * cfg_.hidden;
  const double w_std = 1.0 / std::sqrt(static_cast<double>(cfg_.hidden));
  Rng q_rng(Rng::derive(cfg_.seed, kQueryWeights));
  w_query_ = normals(q_rng, proj, w_std);
  Rng k_rng(Rng::derive(cfg_.seed, kKeyWeights));
  w_key_ = normals(k_rng, proj, w_std);

  Rng b_rng(Rng::derive(cfg_.seed, kQueryBias));
  query_bias_ = normals(b_rng, cfg_.layers * cfg_.heads * cfg_.head_dim, 1.0);
  const double target_norm = std::sqrt(static_cast<double>(cfg_.head_dim));
  for (std::size_t lh = 0; lh < cfg_.layers * cfg_.heads; ++lh) {
    std::span<double> b(query_bias_.data() + lh * cfg_.head_dim, cfg_.head_dim);
    const double norm = std::sqrt(numcore::dot(b, b));
    for (double& x : b) x *= target_norm / norm;
  }
}

DenseVector ToyModel::project(const std::vector<double>& weights, std::size_t layer,
                              std::size_t head, std::size_t position) const {
  const std::uint32_t tok = tokens_.at(position - 1);
  std::span<const double> x(embeddings_.data() + tok * cfg_.hidden, cfg_.hidden);
  const std::size_t base = (layer * cfg_.heads + head) * cfg_.head_dim * cfg_.hidden;
  std::vector<double> out(cfg_.head_dim);
  for (std::size_t r = 0; r < cfg_.head_dim; ++r) {
    out[r] = numcore::dot(std::span<const double>(weights.data() + base + r * cfg_.hidden, cfg_.hidden), x);
  }
  return DenseVector(std::move(out));
}

DenseVector ToyModel::query(std::size_t layer, std::size_t head, std::size_t step) const {
  auto q = project(w_query_, layer, head, step);
  const double* bias = query_bias_.data() + (layer * cfg_.heads + head) * cfg_.head_dim;
  for (std::size_t i = 0; i < q.size(); ++i) q[i] += bias[i];
  return q;
}

DenseVector ToyModel::key(std::size_t layer, std::size_t head, std::size_t position) const {
  auto k = project(w_key_, layer, head, position);
  const std::uint32_t tok = tokens_.at(position - 1);
  double boost = 0.0;
  if (tok == 0) {
    boost = cfg_.sink_boost;
  } else if (tok <= cfg_.heavy_hitter_tokens) {
    boost = cfg_.heavy_hitter_boost;
  }
  if (boost != 0.0) {
    // Along the unit query-bias direction: adds boost * |bias| * scale = boost
    // to the expected logit.
    const double* bias = query_bias_.data() + (layer * cfg_.heads + head) * cfg_.head_dim;
    const double norm = std::sqrt(static_cast<double>(cfg_.head_dim));
    for (std::size_t i = 0; i < k.size(); ++i) k[i] += boost * bias[i] / norm;
  }
  return k;
}

double ToyModel::recency_slope(std::size_t head) const {
  return cfg_.recency_slope * std::pow(4.0, -static_cast<double>(head));
}

double ToyModel::logit_scale() const { return 1.0 / std::sqrt(static_cast<double>(cfg_.head_dim)); }

AttentionTrace ToyModel::trace() const {
  AttentionTrace::Meta meta;
  meta.name = "toy-seed" + std::to_string(cfg_.seed);
  meta.kind = "toy";
  meta.seed = cfg_.seed;
  meta.layers = cfg_.layers;
  meta.heads = cfg_.heads;
  meta.steps = cfg_.seq_len;
  meta.params = {{"head_dim", std::to_string(cfg_.head_dim)},
                 {"vocab", std::to_string(cfg_.vocab)},
                 {"heavy_hitter_tokens", std::to_string(cfg_.heavy_hitter_tokens)}};
  AttentionTrace trace(std::move(meta));

  const double scale = logit_scale();
  for (std::size_t layer = 0; layer < cfg_.layers; ++layer) {
    for (std::size_t head = 0; head < cfg_.heads; ++head) {
      dataflow::KVLayout keys(cfg_.head_dim);
      const double slope = recency_slope(head);
      for (std::size_t t = 1; t <= cfg_.seq_len; ++t) {
        keys.append(key(layer, head, t).data());
        std::vector<double> logits(t);
        dataflow::qk_scores(query(layer, head, t), keys, [&](std::size_t j, double s) {
          logits[j] = s * scale - slope * static_cast<double>(t - 1 - j);
        });
        const auto probs = numcore::softmax_reference(DenseVector(std::move(logits)));
        auto out = trace.row(t, layer, head);
        for (std::size_t j = 0; j < t; ++j) out[j] = static_cast<float>(probs[j]);
      }
    }
  }
  return trace;
}

AttentionTrace gen_toy_trace(const ToyModelConfig& cfg) { return ToyModel(cfg).trace(); }

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kItemCount: return "item-count";
    case ScenarioKind::kCriteria: return "criteria";
    case ScenarioKind::kOutlier: return "outlier";
    case ScenarioKind::kSink: return "sink";
    case ScenarioKind::kRecency: return "recency";
  }
  return "unknown";
}

std::vector<ScenarioKind> all_scenarios() {
  return {ScenarioKind::kItemCount, ScenarioKind::kCriteria, ScenarioKind::kOutlier,
          ScenarioKind::kSink, ScenarioKind::kRecency};
}

ScenarioKind scenario_from_string(std::string_view name) {
  for (auto kind : all_scenarios()) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidArgument("unknown bias scenario '" + std::string(name) + "'");
}

namespace {

struct ScenarioMix {
  double floor = 0.0;
  double recency = 0.0;
  double tau = 2.0;  // head h decays with tau * 2^h
  double sink = 0.0;
  std::size_t sinks = 0;
  double heavy = 0.0;
  std::size_t heavy_count = 0;
  double outlier = 0.0;
  double flat_row_probability = 0.0;  // rows that ignore structure (criteria)
};

ScenarioMix mix_for(ScenarioKind kind) {
  ScenarioMix m;
  switch (kind) {
    case ScenarioKind::kItemCount:
      m.floor = 0.05; m.recency = 1.0; m.tau = 3.0; m.sink = 0.5; m.sinks = 1;
      m.heavy = 0.6; m.heavy_count = 2;
      break;
    case ScenarioKind::kCriteria:
      m.floor = 0.01; m.recency = 1.0; m.tau = 2.0; m.sink = 0.5; m.sinks = 1;
      m.heavy = 1.0; m.heavy_count = 3; m.flat_row_probability = 0.5;
      break;
    case ScenarioKind::kOutlier:
      m.floor = 0.05; m.recency = 1.0; m.tau = 3.0; m.sink = 0.5; m.sinks = 1;
      m.heavy = 0.6; m.heavy_count = 2; m.outlier = 20.0;
      break;
    case ScenarioKind::kSink:
      m.floor = 0.02; m.recency = 0.6; m.tau = 2.0; m.sink = 4.0; m.sinks = 2;
      break;
    case ScenarioKind::kRecency:
      m.floor = 0.01; m.recency = 1.0; m.tau = 4.0;
      break;
  }
  return m;
}

}  // namespace

AttentionTrace gen_bias_scenario(ScenarioKind kind, const ScenarioParams& params) {
  if (params.seq_len < 8) throw InvalidArgument("gen_bias_scenario: seq_len must be >= 8");
  if (params.heads == 0) throw InvalidArgument("gen_bias_scenario: heads must be positive");
  if (!(params.noise >= 0.0)) throw InvalidArgument("gen_bias_scenario: noise must be >= 0");

  const ScenarioMix mix = mix_for(kind);
  const std::size_t n = params.seq_len;
  Rng rng(Rng::derive(params.seed, kScenario + static_cast<std::uint64_t>(kind)));

  // Heavy hitters sit in the first three quarters, after the sinks; the
  // outlier is hot for a short burst early on and cold afterwards.
  std::vector<std::size_t> heavy;
  const std::size_t lo = std::max<std::size_t>(mix.sinks + 1, 6);
  const std::size_t hi = std::max(lo + 1, n * 3 / 4);
  while (heavy.size() < mix.heavy_count) {
    const std::size_t p = lo + rng.index(hi - lo);
    if (std::find(heavy.begin(), heavy.end(), p) == heavy.end()) heavy.push_back(p);
  }
  std::sort(heavy.begin(), heavy.end());
  const std::size_t outlier_pos = std::max<std::size_t>(lo, n / 6);
  const std::size_t outlier_end = outlier_pos + std::max<std::size_t>(4, n / 12);

  AttentionTrace::Meta meta;
  meta.name = std::string(to_string(kind)) + "-seed" + std::to_string(params.seed);
  meta.kind = std::string(to_string(kind));
  meta.seed = params.seed;
  meta.layers = 1;
  meta.heads = params.heads;
  meta.steps = n;
  std::string heavy_list;
  for (auto p : heavy) heavy_list += (heavy_list.empty() ? "" : ",") + std::to_string(p);
  meta.params = {{"heavy_positions", heavy_list}, {"noise", std::to_string(params.noise)}};
  if (mix.outlier > 0.0) {
    meta.params["outlier_position"] = std::to_string(outlier_pos);
    meta.params["outlier_last_step"] = std::to_string(outlier_end);
  }
  AttentionTrace trace(std::move(meta));

  std::vector<double> w;
  for (std::size_t t = 1; t <= n; ++t) {
    for (std::size_t h = 0; h < params.heads; ++h) {
      const bool flat = mix.flat_row_probability > 0.0 && rng.uniform() < mix.flat_row_probability;
      const double tau = mix.tau * std::pow(2.0, static_cast<double>(h));
      w.assign(t, 0.0);
      for (std::size_t j = 1; j <= t; ++j) {
        double x = flat ? 1.0 : mix.floor;
        if (!flat) {
          x += mix.recency * std::exp(-static_cast<double>(t - j) / tau);
          if (j <= mix.sinks) x += mix.sink;
          if (std::binary_search(heavy.begin(), heavy.end(), j)) x += mix.heavy;
          if (mix.outlier > 0.0 && j == outlier_pos && t <= outlier_end) x += mix.outlier;
        }
        w[j - 1] = x * std::exp(params.noise * rng.normal());
      }
      double sum = 0.0;
      for (double x : w) sum += x;
      auto out = trace.row(t, 0, h);
      for (std::size_t j = 0; j < t; ++j) out[j] = static_cast<float>(w[j] / sum);
    }
  }
  return trace;
}

PolicyRun replay_policy(const AttentionTrace& trace, PolicyKind policy,
                        const EvictionConfig& config, std::size_t prompt_len) {
  if (config.num_heads != trace.heads()) {
    throw InvalidArgument("replay_policy: config has " + std::to_string(config.num_heads) +
                          " heads, trace has " + std::to_string(trace.heads()));
  }
  if (prompt_len == 0) throw InvalidArgument("replay_policy: prompt length must be >= 1");

  PolicyRun run;
  run.policy = policy;
  run.config = config;
  run.prompt_len = prompt_len;
  run.retained_mass.reserve(trace.steps());

  std::vector<std::unique_ptr<eviction::Policy>> layers;
  for (std::size_t l = 0; l < trace.layers(); ++l) {
    layers.push_back(eviction::make_policy(policy, config, prompt_len));
  }
  run.target = layers.front()->state().target();

  std::vector<eviction::ScoreRow> rows(trace.heads());
  std::vector<double> restricted;
  for (std::size_t t = 1; t <= trace.steps(); ++t) {
    if (t == prompt_len + 1) {
      for (std::size_t l = 0; l < layers.size(); ++l) {
        for (Position p : layers[l]->begin_generation()) run.evictions.push_back({t, l, p});
      }
    }
    double step_mass = 0.0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& live = layers[l]->state().live_positions();
      double layer_mass = 0.0;
      for (std::size_t h = 0; h < trace.heads(); ++h) {
        const auto full = trace.row(t, l, h);
        restricted.resize(live.size() + 1);
        double kept = 0.0;
        for (std::size_t i = 0; i < live.size(); ++i) {
          restricted[i] = full[live[i] - 1];
          kept += restricted[i];
        }
        restricted.back() = full[t - 1];
        kept += restricted.back();
        double total = 0.0;
        for (float x : full) total += x;
        layer_mass += total > 0.0 ? kept / total : 0.0;

        if (kept > 0.0) {
          for (double& x : restricted) x /= kept;
        } else {
          std::fill(restricted.begin(), restricted.end(), 1.0 / static_cast<double>(restricted.size()));
        }
        rows[h] = {DenseVector(restricted), h};
      }
      step_mass += layer_mass / static_cast<double>(trace.heads());

      if (t <= prompt_len) {
        layers[l]->prefill(rows);
      } else if (auto victim = layers[l]->generate(rows)) {
        run.evictions.push_back({t, l, *victim});
      }
    }
    run.retained_mass.push_back(std::min(1.0, step_mass / static_cast<double>(layers.size())));
  }

  if (!run.retained_mass.empty()) {
    double sum = 0.0;
    run.min_mass = std::numeric_limits<double>::max();
    for (double m : run.retained_mass) {
      sum += m;
      run.min_mass = std::min(run.min_mass, m);
    }
    run.mean_mass = sum / static_cast<double>(run.retained_mass.size());
  }
  return run;
}

QualityReport replay_policies(const AttentionTrace& trace, std::span<const PolicyKind> policies,
                              const EvictionConfig& config, std::size_t prompt_len) {
  QualityReport report;
  report.trace_name = trace.meta().name;
  for (auto kind : policies) report.runs.push_back(replay_policy(trace, kind, config, prompt_len));
  return report;
}

std::vector<ComparisonRow> compare_policies(std::span<const AttentionTrace> traces,
                                            std::span<const PolicyKind> policies,
                                            std::span<const double> ratios,
                                            const EvictionConfig& base, std::size_t prompt_len) {
  std::vector<ComparisonRow> rows;
  rows.reserve(traces.size() * ratios.size() * policies.size());
  for (const auto& trace : traces) {
    for (double ratio : ratios) {
      EvictionConfig cfg = base;
      cfg.ratio = ratio;
      cfg.num_heads = trace.heads();
      for (auto kind : policies) {
        const auto run = replay_policy(trace, kind, cfg, prompt_len);
        rows.push_back({trace.meta().name, kind, ratio, run.target, run.mean_mass, run.min_mass});
      }
    }
  }
  return rows;
}

}  // namespace veda::attnbench
