// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "veda/experiment/config.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>

#include <nlohmann/json.hpp>

#include "veda/error.hpp"

#ifndef VEDA_VERSION_STRING
#define VEDA_VERSION_STRING "0.0.0"
#endif

namespace veda::experiment {

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& preset_table();
}  // namespace detail

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Reads one JSON object, rejecting keys that were never asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    const json* v = child(key);
    if (v == nullptr) return;
    out = convert<T>(*v, join(path_, key));
  }

  template <typename T>
  void require(const std::string& key, T& out) {
    if (!has(key)) throw ConfigError(join(path_, key), "required key is missing");
    get(key, out);
  }

  std::string path_of(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (seen_.count(it.key()) == 0) throw ConfigError(join(path_, it.key()), "unknown key");
    }
  }

  template <typename T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
        throw ConfigError(path, "expected a non-negative integer");
      }
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path, "expected a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
      return v.get<std::string>();
    } else {
      if (!v.is_array()) throw ConfigError(path, "expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<typename T::value_type>(v[i], path + "[" + std::to_string(i) + "]"));
      }
      return out;
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Enum, typename Fn>
Enum parse_enum(ObjectReader& r, const std::string& key, Enum fallback, Fn from_string) {
  std::string name;
  r.get(key, name);
  if (name.empty()) return fallback;
  try {
    return from_string(name);
  } catch (const InvalidArgument& e) {
    throw ConfigError(r.path_of(key), e.what());
  }
}

void read_workload(const json& j, cyclesim::WorkloadConfig& w) {
  ObjectReader r(j, "workload");
  r.get("layers", w.layers);
  r.get("hidden", w.hidden);
  r.get("heads", w.heads);
  r.get("head_dim", w.head_dim);
  r.get("ffn_dim", w.ffn_dim);
  r.get("ffn_gated", w.ffn_gated);
  r.get("prompt_len", w.prompt_len);
  r.get("gen_len", w.gen_len);
  r.get("max_seq", w.max_seq);
  r.finish();
}

void read_eviction(const json& j, cyclesim::WorkloadConfig& w) {
  ObjectReader r(j, "eviction");
  if (j.empty()) {
    w.eviction.reset();
    return;
  }
  eviction::EvictionConfig cfg;
  r.get("ratio", cfg.ratio);
  r.get("reserved", cfg.reserved);
  r.get("coeff_a", cfg.coeff_a);
  r.get("coeff_b", cfg.coeff_b);
  if (const json* t = r.child("target"); t != nullptr && !t->is_null()) {
    cfg.explicit_target = ObjectReader::convert<std::size_t>(*t, "eviction.target");
  }
  r.finish();
  w.eviction = cfg;
}

void read_sfu(const json& j, cyclesim::SFUModel& s) {
  ObjectReader r(j, "arch.sfu");
  r.get("exp_units", s.exp_units);
  r.get("div_units", s.div_units);
  r.get("sqrt_units", s.sqrt_units);
  r.get("mul_units", s.mul_units);
  r.get("add_units", s.add_units);
  r.get("queue_depth", s.queue_depth);
  r.get("flush_epsilon", s.flush_epsilon);
  s.mode = parse_enum(r, "mode", s.mode, cyclesim::sfu_mode_from_string);
  r.finish();
}

void read_memory(const json& j, cyclesim::MemoryModel& m) {
  ObjectReader r(j, "arch.memory");
  r.get("bandwidth_bytes_per_cycle", m.bandwidth_bytes_per_cycle);
  r.get("element_bytes", m.element_bytes);
  r.get("on_chip_buffer_bytes", m.on_chip_buffer_bytes);
  r.finish();
}

void read_arch(const json& j, cyclesim::ArchConfig& a) {
  ObjectReader r(j, "arch");
  r.get("name", a.name);
  a.dataflow = parse_enum(r, "dataflow", a.dataflow, cyclesim::dataflow_from_string);
  r.get("pe_rows", a.array.rows);
  r.get("pe_cols", a.array.cols);
  r.get("pe_banks", a.array.banks);
  r.get("tree_width", a.tree_width);
  r.get("frequency_hz", a.frequency_hz);
  r.get("op_overhead_cycles", a.op_overhead_cycles);
  r.get("elementwise_per_cycle", a.elementwise_per_cycle);
  if (const json* s = r.child("sfu")) read_sfu(*s, a.sfu);
  if (const json* m = r.child("memory")) read_memory(*m, a.memory);
  r.finish();
}

void read_sweep(const json& j, SweepAxes& s) {
  ObjectReader r(j, "sweep");
  if (const json* g = r.child("gen_lengths")) {
    if (g->is_object()) {
      ObjectReader range(*g, "sweep.gen_lengths");
      std::uint64_t from = 1, to = 0, step = 1;
      range.require("from", from);
      range.require("to", to);
      range.get("step", step);
      range.finish();
      if (step == 0) throw ConfigError("sweep.gen_lengths.step", "must be >= 1");
      if (to < from) throw ConfigError("sweep.gen_lengths.to", "must be >= from");
      s.gen_lengths.clear();
      for (std::uint64_t v = from; v <= to; v += step) s.gen_lengths.push_back(v);
    } else {
      s.gen_lengths = ObjectReader::convert<std::vector<std::uint64_t>>(*g, "sweep.gen_lengths");
    }
  }
  r.get("ratios", s.ratios);
  r.get("seeds", s.seeds);
  r.finish();
}

void read_toy(const json& j, attnbench::ToyModelConfig& t) {
  ObjectReader r(j, "evict_bench.toy");
  r.get("layers", t.layers);
  r.get("heads", t.heads);
  r.get("head_dim", t.head_dim);
  r.get("hidden", t.hidden);
  r.get("seq_len", t.seq_len);
  r.get("vocab", t.vocab);
  r.get("heavy_hitter_tokens", t.heavy_hitter_tokens);
  r.get("heavy_hitter_boost", t.heavy_hitter_boost);
  r.get("sink_boost", t.sink_boost);
  r.get("recency_slope", t.recency_slope);
  r.finish();
}

void read_scenario(const json& j, attnbench::ScenarioParams& p) {
  ObjectReader r(j, "evict_bench.scenario");
  r.get("seq_len", p.seq_len);
  r.get("heads", p.heads);
  r.get("noise", p.noise);
  r.finish();
}

void read_bench(const json& j, EvictBenchSpec& b) {
  ObjectReader r(j, "evict_bench");
  r.get("traces", b.traces);
  r.get("policies", b.policies);
  r.get("prompt_len", b.prompt_len);
  r.get("reserved", b.reserved);
  r.get("write_traces", b.write_traces);
  if (const json* t = r.child("toy")) read_toy(*t, b.toy);
  if (const json* s = r.child("scenario")) read_scenario(*s, b.scenario);
  r.finish();
}

ExperimentSpec from_json(const json& j) {
  ExperimentSpec spec;
  ObjectReader r(j, "");
  r.require("schema_version", spec.schema_version);
  if (spec.schema_version != 1) {
    throw ConfigError("schema_version", "unsupported version " + std::to_string(spec.schema_version));
  }
  r.get("name", spec.name);
  spec.command = parse_enum(r, "command", spec.command, command_from_string);
  r.get("seed", spec.seed);
  if (const json* w = r.child("workload")) read_workload(*w, spec.workload);
  if (const json* e = r.child("eviction")) read_eviction(*e, spec.workload);
  if (const json* a = r.child("arch")) read_arch(*a, spec.arch);
  if (const json* s = r.child("sweep")) read_sweep(*s, spec.sweep);
  if (const json* b = r.child("evict_bench")) read_bench(*b, spec.bench);
  r.finish();
  if (spec.workload.eviction) spec.workload.eviction->num_heads = spec.workload.heads;
  spec.validate();
  return spec;
}

json to_json(const ExperimentSpec& s) {
  const auto& w = s.workload;
  const auto& a = s.arch;
  json eviction = json::object();
  if (w.eviction) {
    eviction = {{"ratio", w.eviction->ratio},
                {"reserved", w.eviction->reserved},
                {"coeff_a", w.eviction->coeff_a},
                {"coeff_b", w.eviction->coeff_b},
                {"target", w.eviction->explicit_target ? json(*w.eviction->explicit_target) : json(nullptr)}};
  }
  const auto& t = s.bench.toy;
  const auto& p = s.bench.scenario;
  return {
      {"schema_version", s.schema_version},
      {"name", s.name},
      {"command", std::string(to_string(s.command))},
      {"seed", s.seed},
      {"workload",
       {{"layers", w.layers},
        {"hidden", w.hidden},
        {"heads", w.heads},
        {"head_dim", w.head_dim},
        {"ffn_dim", w.ffn_dim},
        {"ffn_gated", w.ffn_gated},
        {"prompt_len", w.prompt_len},
        {"gen_len", w.gen_len},
        {"max_seq", w.max_seq}}},
      {"eviction", eviction},
      {"arch",
       {{"name", a.name},
        {"dataflow", std::string(cyclesim::to_string(a.dataflow))},
        {"pe_rows", a.array.rows},
        {"pe_cols", a.array.cols},
        {"pe_banks", a.array.banks},
        {"tree_width", a.tree_width},
        {"frequency_hz", a.frequency_hz},
        {"op_overhead_cycles", a.op_overhead_cycles},
        {"elementwise_per_cycle", a.elementwise_per_cycle},
        {"sfu",
         {{"exp_units", a.sfu.exp_units},
          {"div_units", a.sfu.div_units},
          {"sqrt_units", a.sfu.sqrt_units},
          {"mul_units", a.sfu.mul_units},
          {"add_units", a.sfu.add_units},
          {"queue_depth", a.sfu.queue_depth},
          {"flush_epsilon", a.sfu.flush_epsilon},
          {"mode", std::string(cyclesim::to_string(a.sfu.mode))}}},
        {"memory",
         {{"bandwidth_bytes_per_cycle", a.memory.bandwidth_bytes_per_cycle},
          {"element_bytes", a.memory.element_bytes},
          {"on_chip_buffer_bytes", a.memory.on_chip_buffer_bytes}}}}},
      {"sweep", {{"gen_lengths", s.sweep.gen_lengths}, {"ratios", s.sweep.ratios}, {"seeds", s.sweep.seeds}}},
      {"evict_bench",
       {{"traces", s.bench.traces},
        {"policies", s.bench.policies},
        {"prompt_len", s.bench.prompt_len},
        {"reserved", s.bench.reserved},
        {"write_traces", s.bench.write_traces},
        {"toy",
         {{"layers", t.layers},
          {"heads", t.heads},
          {"head_dim", t.head_dim},
          {"hidden", t.hidden},
          {"seq_len", t.seq_len},
          {"vocab", t.vocab},
          {"heavy_hitter_tokens", t.heavy_hitter_tokens},
          {"heavy_hitter_boost", t.heavy_hitter_boost},
          {"sink_boost", t.sink_boost},
          {"recency_slope", t.recency_slope}}},
        {"scenario", {{"seq_len", p.seq_len}, {"heads", p.heads}, {"noise", p.noise}}}}},
  };
}

}  // namespace

std::string_view to_string(CommandKind c) {
  switch (c) {
    case CommandKind::kSimulate: return "simulate";
    case CommandKind::kAblateDataflow: return "ablate-dataflow";
    case CommandKind::kAblateEviction: return "ablate-eviction";
    case CommandKind::kEvictBench: return "evict-bench";
    case CommandKind::kValidateConfig: return "validate-config";
  }
  return "unknown";
}

CommandKind command_from_string(std::string_view name) {
  for (auto c : {CommandKind::kSimulate, CommandKind::kAblateDataflow, CommandKind::kAblateEviction,
                 CommandKind::kEvictBench, CommandKind::kValidateConfig}) {
    if (to_string(c) == name) return c;
  }
  throw InvalidArgument("unknown command '" + std::string(name) + "'");
}

void ExperimentSpec::validate() const {
  auto rethrow = [](const std::string& path, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(path, e.what());
    }
  };
  rethrow("workload", [&] { workload.validate(); });
  rethrow("arch", [&] { arch.validate(); });
  if (workload.eviction) {
    const auto& e = *workload.eviction;
    if (!(e.ratio > 0.0 && e.ratio <= 1.0)) throw ConfigError("eviction.ratio", "must be in (0, 1]");
    rethrow("eviction", [&] { e.validate(); });
  }
  for (std::size_t i = 0; i < sweep.ratios.size(); ++i) {
    const double r = sweep.ratios[i];
    if (!(r > 0.0 && r <= 1.0)) {
      throw ConfigError("sweep.ratios[" + std::to_string(i) + "]", "must be in (0, 1]");
    }
  }
  for (std::size_t i = 0; i < sweep.gen_lengths.size(); ++i) {
    const auto g = sweep.gen_lengths[i];
    const std::string path = "sweep.gen_lengths[" + std::to_string(i) + "]";
    if (g == 0) throw ConfigError(path, "must be >= 1");
    if (workload.prompt_len + g > workload.max_seq) throw ConfigError(path, "prompt + generation exceeds max_seq");
  }
  switch (command) {
    case CommandKind::kAblateDataflow:
      if (sweep.gen_lengths.empty()) throw ConfigError("sweep.gen_lengths", "ablate-dataflow needs G points");
      break;
    case CommandKind::kAblateEviction:
      if (sweep.gen_lengths.empty()) throw ConfigError("sweep.gen_lengths", "ablate-eviction needs G points");
      if (sweep.ratios.empty()) throw ConfigError("sweep.ratios", "ablate-eviction needs ratios");
      break;
    case CommandKind::kEvictBench:
      if (sweep.ratios.empty()) throw ConfigError("sweep.ratios", "evict-bench needs ratios");
      if (bench.traces.empty()) throw ConfigError("evict_bench.traces", "must be nonempty");
      if (bench.policies.empty()) throw ConfigError("evict_bench.policies", "must be nonempty");
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < bench.traces.size(); ++i) {
    if (bench.traces[i] == "toy") continue;
    rethrow("evict_bench.traces[" + std::to_string(i) + "]",
            [&] { (void)attnbench::scenario_from_string(bench.traces[i]); });
  }
  for (std::size_t i = 0; i < bench.policies.size(); ++i) {
    rethrow("evict_bench.policies[" + std::to_string(i) + "]",
            [&] { (void)eviction::policy_from_string(bench.policies[i]); });
  }
  rethrow("evict_bench.toy", [&] { bench.toy.validate(); });
  const std::size_t trace_len = std::min(bench.toy.seq_len, bench.scenario.seq_len);
  if (bench.prompt_len > trace_len) throw ConfigError("evict_bench.prompt_len", "exceeds the trace length");
}

ExperimentSpec parse_config_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return from_json(j);
}

ExperimentSpec parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

std::string serialize(const ExperimentSpec& spec) { return to_json(spec).dump(2) + "\n"; }

std::string config_hash(const ExperimentSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize(spec)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : detail::preset_table()) names.emplace_back(name);
  std::sort(names.begin(), names.end());
  return names;
}

std::string_view preset_text(std::string_view name) {
  for (const auto& [n, text] : detail::preset_table()) {
    if (n == name) return text;
  }
  throw ConfigError("preset", "unknown preset '" + std::string(name) + "'");
}

ExperimentSpec load_preset(std::string_view name) { return parse_config_text(preset_text(name)); }

std::string_view tool_version() { return VEDA_VERSION_STRING; }

}  // namespace veda::experiment
