// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "veda/attnbench.hpp"
#include "veda/eviction.hpp"

namespace {

namespace ev = veda::eviction;

std::vector<ev::ScoreRow> rows_for(std::size_t heads, std::size_t len, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ev::ScoreRow> rows;
  for (std::size_t h = 0; h < heads; ++h) {
    std::vector<double> v(len);
    double sum = 0.0;
    for (auto& x : v) sum += (x = u(gen) * u(gen));
    for (auto& x : v) x /= sum;
    rows.push_back({veda::numcore::DenseVector(std::move(v)), h});
  }
  return rows;
}

// One generation step at a steady cache of `target` entries, 32 heads.
void BM_VotingGenerationStep(benchmark::State& state) {
  ev::EvictionConfig cfg;
  cfg.num_heads = 32;
  cfg.reserved = 32;
  cfg.explicit_target = static_cast<std::size_t>(state.range(0));
  const std::size_t prompt = *cfg.explicit_target;
  auto base = ev::make_state(prompt, cfg);
  for (std::size_t t = 1; t <= prompt; ++t) base.admit_next();
  ev::transition_to_generation(base, cfg);
  const auto rows = rows_for(32, prompt + 1, 1);
  for (auto _ : state) {
    state.PauseTiming();
    auto s = base;
    state.ResumeTiming();
    benchmark::DoNotOptimize(ev::generation_step(s, rows, cfg));
  }
}
BENCHMARK(BM_VotingGenerationStep)->Arg(256)->Arg(1024);

void BM_ReplayToyTrace(benchmark::State& state) {
  veda::attnbench::ToyModelConfig cfg;
  const auto trace = veda::attnbench::gen_toy_trace(cfg);
  ev::EvictionConfig ecfg;
  ecfg.num_heads = cfg.heads;
  ecfg.reserved = 4;
  ecfg.ratio = 0.25;
  const auto policy = static_cast<ev::PolicyKind>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(veda::attnbench::replay_policy(trace, policy, ecfg, trace.steps() / 2));
  }
  state.SetLabel(std::string(ev::to_string(policy)));
}
BENCHMARK(BM_ReplayToyTrace)
    ->Arg(static_cast<int>(ev::PolicyKind::kVoting))
    ->Arg(static_cast<int>(ev::PolicyKind::kH2O))
    ->Arg(static_cast<int>(ev::PolicyKind::kSlidingWindow));

void BM_GenToyTrace(benchmark::State& state) {
  veda::attnbench::ToyModelConfig cfg;
  cfg.seq_len = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(veda::attnbench::gen_toy_trace(cfg));
}
BENCHMARK(BM_GenToyTrace)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
