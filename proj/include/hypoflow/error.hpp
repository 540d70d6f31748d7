#pragma once

#include <stdexcept>
#include <string>

namespace hypoflow {

/// Numerical or structural failure raised by one of the toolkit modules.
/// The message is prefixed with the module name, e.g. "hilbert-core: degenerate metric".
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)), reason_(message) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string module_;
  std::string reason_;
};

/// Invalid user input (arguments, config files, model files).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  ConfigError(const std::string& module, const std::string& message) : std::runtime_error(module + ": " + message) {}
};

}  // namespace hypoflow
