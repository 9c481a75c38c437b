// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "veda/experiment/runner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "veda/error.hpp"

namespace veda::experiment {
namespace {

using nlohmann::json;

// Runs fn(i) for i in [0, n) on up to `jobs` threads; results keep index order.
template <typename R, typename Fn>
std::vector<R> parallel_map(std::size_t n, std::size_t jobs, Fn fn) {
  std::vector<R> results(n);
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          results[i] = fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

std::string str(std::uint64_t v) { return std::to_string(v); }
std::string dbl(double v) { return format_double(v); }

struct Context {
  const ExperimentSpec& spec;
  Provenance prov;
  std::size_t jobs;
};

Table make_table(std::string name, std::vector<std::string> columns) {
  columns.insert(columns.end(), {"config_hash", "seed", "tool_version"});
  return Table{std::move(name), std::move(columns), {}};
}

void add_row(const Context& ctx, Table& t, std::vector<std::string> row) {
  row.insert(row.end(), {ctx.prov.config_hash, str(ctx.prov.seed), ctx.prov.tool_version});
  t.rows.push_back(std::move(row));
}

json provenance_json(const Context& ctx) {
  return {{"config_hash", ctx.prov.config_hash}, {"seed", ctx.prov.seed}, {"tool_version", ctx.prov.tool_version}};
}

std::string digest_header(const Context& ctx) {
  std::ostringstream os;
  os << "veda " << ctx.prov.tool_version << "  " << to_string(ctx.spec.command) << "  '" << ctx.spec.name << "'\n"
     << "config " << ctx.prov.config_hash << "  seed " << ctx.prov.seed << "\n";
  return os.str();
}

void run_simulate(const Context& ctx, ReportBundle& b) {
  const auto& spec = ctx.spec;
  std::vector<std::uint64_t> points = spec.sweep.gen_lengths;
  if (points.empty()) points.push_back(spec.workload.gen_len);

  auto reports = parallel_map<cyclesim::CycleReport>(points.size(), ctx.jobs, [&](std::size_t i) {
    cyclesim::WorkloadConfig w = spec.workload;
    w.gen_len = points[i];
    return cyclesim::simulate(w, spec.arch);
  });

  Table main = make_table("simulate",
                          {"point", "arch", "dataflow", "sfu_mode", "prompt_len", "gen_len", "eviction_ratio",
                           "target", "prefill_cycles", "generation_cycles", "total_cycles", "tokens_per_s",
                           "mean_attention_cycles", "generation_bytes", "prefill_utilization",
                           "generation_utilization"});
  Table ops = make_table("simulate_operators",
                         {"point", "gen_len", "phase", "operator", "cycles", "compute_cycles", "memory_cycles",
                          "overhead_cycles", "bytes", "macs", "invocations"});
  const auto& w = spec.workload;
  const std::string ratio = w.eviction ? dbl(w.eviction->ratio) : "";
  const std::string target = w.eviction ? str(eviction::target_size(w.prompt_len, *w.eviction)) : "";
  json rows = json::array();
  std::ostringstream digest;
  digest << digest_header(ctx);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& r = reports[i];
    const double mean_attn = r.step_attention_cycles.empty() ? 0.0 : r.mean_step_attention_cycles();
    add_row(ctx, main,
            {str(i), spec.arch.name, std::string(cyclesim::to_string(spec.arch.dataflow)),
             std::string(cyclesim::to_string(spec.arch.sfu.mode)), str(w.prompt_len), str(points[i]), ratio, target,
             str(r.prefill.cycles), str(r.generation.cycles), str(r.total_cycles()), dbl(r.tokens_per_s),
             dbl(mean_attn), str(r.generation.bytes), dbl(r.prefill_utilization), dbl(r.generation_utilization)});
    for (auto phase : {cyclesim::Phase::kPrefill, cyclesim::Phase::kGeneration}) {
      const auto& p = phase == cyclesim::Phase::kPrefill ? r.prefill : r.generation;
      for (const auto& op : p.ops) {
        add_row(ctx, ops,
                {str(i), str(points[i]), std::string(cyclesim::to_string(phase)),
                 std::string(cyclesim::to_string(op.kind)), str(op.cycles), str(op.compute_cycles),
                 str(op.memory_cycles), str(op.overhead_cycles), str(op.bytes), str(op.macs), str(op.invocations)});
      }
    }
    rows.push_back({{"gen_len", points[i]},
                    {"prefill_cycles", r.prefill.cycles},
                    {"generation_cycles", r.generation.cycles},
                    {"tokens_per_s", r.tokens_per_s},
                    {"mean_attention_cycles", mean_attn}});
    digest << "G=" << points[i] << "  prefill " << r.prefill.cycles << " cycles  generation " << r.generation.cycles
           << " cycles  " << dbl(r.tokens_per_s) << " tokens/s\n";
  }
  b.tables = {std::move(main), std::move(ops)};
  b.summary_json = json{{"command", "simulate"}, {"provenance", provenance_json(ctx)}, {"points", rows}}.dump(2) + "\n";
  b.digest = digest.str();
}

void run_ablate_dataflow(const Context& ctx, ReportBundle& b) {
  const auto& spec = ctx.spec;
  const auto points = cyclesim::ablation_dataflow(spec.workload, spec.arch, spec.sweep.gen_lengths);
  Table t = make_table("ablate_dataflow",
                       {"gen_len", "baseline_cycles", "flexible_cycles", "flexible_serial_cycles",
                        "flexible_over_baseline", "serial_over_baseline"});
  json rows = json::array();
  double sum_f = 0.0, sum_fe = 0.0;
  for (const auto& p : points) {
    const double f = p.flexible / p.baseline;
    const double fe = p.flexible_serial / p.baseline;
    sum_f += f;
    sum_fe += fe;
    add_row(ctx, t, {str(p.gen_len), dbl(p.baseline), dbl(p.flexible), dbl(p.flexible_serial), dbl(f), dbl(fe)});
    rows.push_back({{"gen_len", p.gen_len}, {"flexible_over_baseline", f}, {"serial_over_baseline", fe}});
  }
  const double n = static_cast<double>(points.size());
  std::ostringstream digest;
  digest << digest_header(ctx) << points.size() << " G points, P=" << spec.workload.prompt_len << "\n"
         << "mean flexible/baseline        " << dbl(sum_f / n) << "\n"
         << "mean flexible+serial/baseline " << dbl(sum_fe / n) << "\n";
  b.tables = {std::move(t)};
  b.summary_json = json{{"command", "ablate-dataflow"},
                        {"provenance", provenance_json(ctx)},
                        {"mean_flexible_over_baseline", sum_f / n},
                        {"mean_serial_over_baseline", sum_fe / n},
                        {"points", rows}}
                       .dump(2) + "\n";
  b.digest = digest.str();
}

void run_ablate_eviction(const Context& ctx, ReportBundle& b) {
  const auto& spec = ctx.spec;
  const auto& ratios = spec.sweep.ratios;
  auto per_ratio = parallel_map<std::vector<cyclesim::EvictionPoint>>(ratios.size(), ctx.jobs, [&](std::size_t i) {
    return cyclesim::ablation_eviction(spec.workload, spec.arch, std::span<const double>(&ratios[i], 1),
                                       spec.sweep.gen_lengths);
  });
  Table t = make_table("ablate_eviction",
                       {"ratio", "target", "gen_len", "without_eviction_cycles", "with_eviction_cycles", "speedup"});
  json rows = json::array();
  double lo = 1e300, hi = 0.0;
  bool monotone = true;
  for (const auto& points : per_ratio) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      const auto& p = points[j];
      lo = std::min(lo, p.speedup);
      hi = std::max(hi, p.speedup);
      if (j > 0 && points[j - 1].gen_len < p.gen_len && p.speedup < points[j - 1].speedup) monotone = false;
      add_row(ctx, t, {dbl(p.ratio), str(p.target), str(p.gen_len), dbl(p.without_eviction), dbl(p.with_eviction),
                       dbl(p.speedup)});
      rows.push_back({{"ratio", p.ratio}, {"gen_len", p.gen_len}, {"target", p.target}, {"speedup", p.speedup}});
    }
  }
  std::ostringstream digest;
  digest << digest_header(ctx) << "speedup range " << dbl(lo) << " .. " << dbl(hi)
         << (monotone ? "  (monotone in G)" : "  (NOT monotone in G)") << "\n";
  b.tables = {std::move(t)};
  b.summary_json = json{{"command", "ablate-eviction"},
                        {"provenance", provenance_json(ctx)},
                        {"min_speedup", lo},
                        {"max_speedup", hi},
                        {"monotone_in_gen_len", monotone},
                        {"points", rows}}
                       .dump(2) + "\n";
  b.digest = digest.str();
}

struct TraceJob {
  std::string kind;
  std::uint64_t seed;
};

struct TraceResult {
  std::string name;
  std::vector<attnbench::ComparisonRow> rows;
};

void run_evict_bench(const Context& ctx, const RunOptions& options, ReportBundle& b) {
  const auto& spec = ctx.spec;
  const auto& bench = spec.bench;
  std::vector<std::uint64_t> seeds = spec.sweep.seeds;
  if (seeds.empty()) seeds.push_back(spec.seed);
  std::vector<TraceJob> jobs;
  for (const auto& kind : bench.traces) {
    for (auto s : seeds) jobs.push_back({kind, s});
  }
  std::vector<eviction::PolicyKind> policies;
  for (const auto& p : bench.policies) policies.push_back(eviction::policy_from_string(p));

  eviction::EvictionConfig base = spec.workload.eviction.value_or(eviction::EvictionConfig{});
  base.reserved = bench.reserved;
  base.explicit_target.reset();

  const bool write = bench.write_traces && options.trace_dir.has_value();
  if (write) std::filesystem::create_directories(*options.trace_dir);

  auto results = parallel_map<TraceResult>(jobs.size(), ctx.jobs, [&](std::size_t i) {
    attnbench::AttentionTrace trace;
    if (jobs[i].kind == "toy") {
      auto cfg = bench.toy;
      cfg.seed = jobs[i].seed;
      trace = attnbench::gen_toy_trace(cfg);
    } else {
      auto params = bench.scenario;
      params.seed = jobs[i].seed;
      trace = attnbench::gen_bias_scenario(attnbench::scenario_from_string(jobs[i].kind), params);
    }
    if (write) attnbench::write_trace(trace, *options.trace_dir / (trace.meta().name + ".vtrace"));
    const std::size_t prompt = bench.prompt_len > 0 ? bench.prompt_len : trace.steps() / 2;
    std::span<const attnbench::AttentionTrace> one(&trace, 1);
    return TraceResult{trace.meta().name,
                       attnbench::compare_policies(one, policies, spec.sweep.ratios, base, prompt)};
  });

  Table t = make_table("evict_bench",
                       {"trace", "kind", "trace_seed", "ratio", "policy", "target", "mean_mass", "min_mass"});
  // (ratio, policy) -> sum of mean mass, for the digest.
  std::map<std::pair<double, std::string>, std::pair<double, int>> agg;
  json rows = json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    for (const auto& r : results[i].rows) {
      const std::string policy(eviction::to_string(r.policy));
      add_row(ctx, t, {r.trace, jobs[i].kind, str(jobs[i].seed), dbl(r.ratio), policy, str(r.target),
                       dbl(r.mean_mass), dbl(r.min_mass)});
      auto& a = agg[{r.ratio, policy}];
      a.first += r.mean_mass;
      a.second += 1;
      rows.push_back({{"trace", r.trace}, {"ratio", r.ratio}, {"policy", policy}, {"mean_mass", r.mean_mass},
                      {"min_mass", r.min_mass}});
    }
  }
  std::ostringstream digest;
  digest << digest_header(ctx) << jobs.size() << " traces\n";
  json averages = json::array();
  for (const auto& [key, a] : agg) {
    const double mean = a.first / a.second;
    digest << "ratio " << dbl(key.first) << "  " << key.second << "  mean retained mass " << dbl(mean) << "\n";
    averages.push_back({{"ratio", key.first}, {"policy", key.second}, {"mean_mass", mean}});
  }
  b.tables = {std::move(t)};
  b.summary_json = json{{"command", "evict-bench"},
                        {"provenance", provenance_json(ctx)},
                        {"averages", averages},
                        {"rows", rows}}
                       .dump(2) + "\n";
  b.digest = digest.str();
}

}  // namespace

ReportBundle run(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  Context ctx{spec, {config_hash(spec), spec.seed, std::string(tool_version())}, std::max<std::size_t>(1, options.jobs)};
  ReportBundle b;
  b.command = std::string(to_string(spec.command));
  b.provenance = ctx.prov;
  switch (spec.command) {
    case CommandKind::kSimulate: run_simulate(ctx, b); break;
    case CommandKind::kAblateDataflow: run_ablate_dataflow(ctx, b); break;
    case CommandKind::kAblateEviction: run_ablate_eviction(ctx, b); break;
    case CommandKind::kEvictBench: run_evict_bench(ctx, options, b); break;
    case CommandKind::kValidateConfig:
      b.summary_json = json{{"command", "validate-config"}, {"provenance", provenance_json(ctx)}, {"valid", true}}
                           .dump(2) + "\n";
      b.digest = digest_header(ctx) + "configuration is valid\n";
      break;
  }
  return b;
}

}  // namespace veda::experiment
