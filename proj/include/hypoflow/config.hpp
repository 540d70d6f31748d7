#pragma once

// Flat TOML subset for run configuration files: `key = value` lines with
// strings, numbers, booleans and single-line arrays; `#` comments.

#include <string>

#include "json.hpp"

namespace hypoflow {

/// Parses the subset into a JSON object. Tables, inline tables, multi-line
/// values, dates and duplicate keys are rejected with ConfigError.
nlohmann::json parse_config(const std::string& text);
nlohmann::json load_config_file(const std::string& path);

}  // namespace hypoflow
