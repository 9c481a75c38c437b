// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

// veda <verb> (--config FILE | --preset NAME) [--out DIR] [--seed N] [--jobs N]
//
// Exit codes: 0 success, 1 usage, 2 configuration, 3 runtime.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "veda/error.hpp"
#include "veda/experiment/config.hpp"
#include "veda/experiment/runner.hpp"

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

struct Options {
  std::string config;
  std::string preset;
  std::string out = "veda-out";
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

void add_common(CLI::App* cmd, Options& o) {
  auto* config = cmd->add_option("--config", o.config, "experiment JSON file");
  auto* preset = cmd->add_option("--preset", o.preset, "built-in preset name");
  config->excludes(preset);
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--jobs", o.jobs, "parallel sweep points")->check(CLI::PositiveNumber)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace veda::experiment;

  CLI::App app{"VEDA accelerator and KV-cache eviction simulator"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(0, 1);
  bool list_presets = false;
  app.add_flag("--list-presets", list_presets, "print built-in preset names and exit");

  Options opts;
  const std::pair<const char*, const char*> verbs[] = {
      {"simulate", "end-to-end prefill + generation cycle report"},
      {"ablate-dataflow", "baseline vs flexible vs flexible+element-serial attention latency"},
      {"ablate-eviction", "attention speedup from eviction across ratios and G"},
      {"evict-bench", "retained attention mass of eviction policies on synthetic traces"},
      {"validate-config", "parse and validate a spec, print its hash"},
  };
  for (const auto& [name, help] : verbs) add_common(app.add_subcommand(name, help), opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (list_presets) {
    for (const auto& n : preset_names()) std::cout << n << "\n";
    return kOk;
  }

  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kUsage;
  }
  const CLI::App* sub = app.get_subcommands().front();
  if (opts.config.empty() == opts.preset.empty()) {
    std::cerr << "veda " << sub->get_name() << ": exactly one of --config or --preset is required\n";
    return kUsage;
  }

  ExperimentSpec spec;
  try {
    spec = opts.config.empty() ? load_preset(opts.preset) : parse_config(opts.config);
    spec.command = command_from_string(sub->get_name());
    if (opts.seed) spec.seed = *opts.seed;
    spec.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }

  if (spec.command == CommandKind::kValidateConfig) {
    std::cout << "ok " << config_hash(spec) << "\n";
    return kOk;
  }

  try {
    RunOptions ro;
    ro.jobs = opts.jobs;
    ro.trace_dir = std::filesystem::path(opts.out) / "traces";
    const auto bundle = run(spec, ro);
    const auto files = emit_reports(bundle, opts.out);
    std::cout << bundle.digest;
    for (const auto& t : files.tables) std::cout << "wrote " << t.string() << "\n";
    std::cout << "wrote " << files.summary.string() << "\nwrote " << files.digest.string() << "\n";
  } catch (const veda::InvalidConfiguration& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
