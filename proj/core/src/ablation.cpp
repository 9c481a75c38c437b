// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "veda/cyclesim.hpp"
#include "veda/error.hpp"

namespace veda::cyclesim {
namespace {

std::uint64_t max_point(std::span<const std::uint64_t> points) {
  if (points.empty()) throw InvalidArgument("ablation: at least one generation length is required");
  for (auto g : points) {
    if (g == 0) throw InvalidArgument("ablation: generation length 0 has no per-token average");
  }
  return *std::max_element(points.begin(), points.end());
}

// prefix[g] = sum of attention cycles over steps 1..g at the given lengths.
template <typename LengthFn>
std::vector<double> attention_prefix(const WorkloadConfig& w, const ArchConfig& arch, std::uint64_t steps,
                                     LengthFn length_of) {
  std::vector<double> prefix(steps + 1, 0.0);
  for (std::uint64_t g = 1; g <= steps; ++g) {
    prefix[g] = prefix[g - 1] + static_cast<double>(attention_step_cycles(w, arch, length_of(g)));
  }
  return prefix;
}

void check_workload(const WorkloadConfig& w, std::uint64_t gmax) {
  WorkloadConfig probe = w;
  probe.gen_len = gmax;
  probe.validate();
}

}  // namespace

std::vector<DataflowPoint> ablation_dataflow(const WorkloadConfig& w, const ArchConfig& arch,
                                             std::span<const std::uint64_t> gen_points) {
  const std::uint64_t gmax = max_point(gen_points);
  check_workload(w, gmax);
  arch.validate();

  const ArchConfig base = ArchConfig::baseline_of(arch);
  ArchConfig flex = arch;
  flex.dataflow = DataflowKind::kFlexible;
  flex.sfu.mode = SfuMode::kConventional;
  ArchConfig serial = flex;
  serial.sfu.mode = SfuMode::kElementSerial;

  const std::uint64_t p = w.prompt_len;
  auto grow = [p](std::uint64_t g) { return p + g; };
  const auto b = attention_prefix(w, base, gmax, grow);
  const auto f = attention_prefix(w, flex, gmax, grow);
  const auto fe = attention_prefix(w, serial, gmax, grow);

  std::vector<DataflowPoint> out;
  out.reserve(gen_points.size());
  for (auto g : gen_points) {
    const double n = static_cast<double>(g);
    out.push_back({g, b[g] / n, f[g] / n, fe[g] / n});
  }
  return out;
}

std::vector<EvictionPoint> ablation_eviction(const WorkloadConfig& w, const ArchConfig& arch,
                                             std::span<const double> ratios,
                                             std::span<const std::uint64_t> gen_points) {
  if (ratios.empty()) throw InvalidArgument("ablation_eviction: at least one ratio is required");
  const std::uint64_t gmax = max_point(gen_points);
  check_workload(w, gmax);
  arch.validate();

  const std::uint64_t p = w.prompt_len;
  const auto off = attention_prefix(w, arch, gmax, [p](std::uint64_t g) { return p + g; });

  std::vector<EvictionPoint> out;
  out.reserve(ratios.size() * gen_points.size());
  for (double ratio : ratios) {
    eviction::EvictionConfig cfg = w.eviction.value_or(eviction::EvictionConfig{});
    cfg.ratio = ratio;
    cfg.explicit_target.reset();
    cfg.validate();
    const std::size_t target = eviction::target_size(p, cfg);
    const auto on = attention_prefix(w, arch, gmax, [&](std::uint64_t g) {
      return static_cast<std::uint64_t>(eviction::generation_attention_length(p, g, target));
    });
    for (auto g : gen_points) {
      const double n = static_cast<double>(g);
      const double without = off[g] / n;
      const double with = on[g] / n;
      out.push_back({ratio, g, target, without, with, without / with});
    }
  }
  return out;
}

}  // namespace veda::cyclesim
