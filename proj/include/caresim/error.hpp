#pragma once

#include <stdexcept>
#include <string>

namespace caresim {

// Malformed or out-of-range configuration (scenario, model, weights, CLI).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse, e.g. advancing a finished episode.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Persisted artifact (q-table, policy, training log) that does not parse.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace caresim
