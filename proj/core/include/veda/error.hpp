// Copyright 2026 The veda-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace veda {

/// Caller passed a value outside an operation's domain (shape, range, length).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation called in a state that does not admit it (wrong phase, empty stats).
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Arithmetic has no defined result (e.g. normalizing by a zero exp-sum).
class NumericDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Simulator configuration is inconsistent with itself or with the schedule.
class InvalidConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment config file failed schema validation. `key_path` is dotted,
/// e.g. "workload.hidden".
class ConfigError : public InvalidConfiguration {
 public:
  ConfigError(std::string key_path, const std::string& what)
      : InvalidConfiguration(key_path.empty() ? what : key_path + ": " + what),
        key_path_(std::move(key_path)) {}

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace veda
