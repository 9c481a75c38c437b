// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace veda::experiment {

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version;
};

struct ReportBundle {
  std::string command;
  Provenance provenance;
  std::vector<Table> tables;
  std::string summary_json;  // structured summary, deterministic
  std::string digest;        // plain text
};

/// RFC 4180: fields containing a comma, quote, CR or LF are quoted, quotes
/// doubled, CRLF line ends.
std::string to_csv(const Table& table);
std::string csv_escape(const std::string& field);

/// Fixed "%.10g" rendering so tables are byte-stable.
std::string format_double(double v);

struct EmittedFiles {
  std::vector<std::filesystem::path> tables;
  std::filesystem::path summary;
  std::filesystem::path digest;
};

/// Writes <name>.csv per table, summary.json and digest.txt under `dir`,
/// creating it if needed. Throws IoError when a file cannot be written.
EmittedFiles emit_reports(const ReportBundle& bundle, const std::filesystem::path& dir);

}  // namespace veda::experiment
