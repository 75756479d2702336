// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ifcn {

constexpr int kSampleRate = 16000;

// Configuration problems: bad keys, invalid hyperparameters. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Data problems: unreadable files, wrong sample rate, empty input. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures: NaN loss, non-finite signals. CLI exit code 4.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

#define IFCN_CHECK(cond, msg)                         \
  do {                                                \
    if (!(cond)) throw std::runtime_error(msg);       \
  } while (0)

#define IFCN_CHECK_CFG(cond, msg)                     \
  do {                                                \
    if (!(cond)) throw ::ifcn::ConfigError(msg);      \
  } while (0)

#define IFCN_CHECK_DATA(cond, msg)                    \
  do {                                                \
    if (!(cond)) throw ::ifcn::DataError(msg);        \
  } while (0)

}  // namespace ifcn
