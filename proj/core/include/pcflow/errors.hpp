#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace pcflow {

/// Raised when a configuration value violates its contract. `key()` names the
/// offending field using the dotted path of the configuration file.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Raised when a particle or intermediate quantity becomes non-finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pcflow
