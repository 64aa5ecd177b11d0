#pragma once

#include <stdexcept>
#include <string>

namespace crowdact {

/// Malformed or inconsistent input data (files, records, value ranges).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: thresholds, rules files, class sets, flags.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crowdact
