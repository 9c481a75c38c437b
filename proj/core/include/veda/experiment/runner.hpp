// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>

#include "veda/experiment/config.hpp"
#include "veda/experiment/reports.hpp"

namespace veda::experiment {

struct RunOptions {
  std::size_t jobs = 1;
  /// Where evict-bench writes trace files when the experiment config asks for them.
  std::optional<std::filesystem::path> trace_dir;
};

/// Dispatches on spec.command. Sweep points run on up to `jobs` threads and
/// are assembled in sweep order.
ReportBundle run(const ExperimentSpec& spec, const RunOptions& options = {});

}  // namespace veda::experiment
