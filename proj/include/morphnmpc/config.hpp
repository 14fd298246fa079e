#pragma once

// Scenario files: an INI-like text with [robot], [nmpc], [scenario] and [sim]
// sections of `key = value` lines. Values are numbers, words, tuples
// `(a, b, c)`, lists `[ ... ]` (which may span lines) and records
// `{key=value, ...}`. `deg(x)` converts degrees to radians; angles are stored
// in radians. `#` starts a comment.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "morphnmpc/harness.hpp"

namespace morphnmpc {

struct SimSettings {
  unsigned seed = 1;  // random instances in selftest
  std::string out_dir = "out";

  bool operator==(const SimSettings&) const = default;
};

struct RunConfig {
  Scenario scenario;
  SimSettings sim;

  bool operator==(const RunConfig&) const = default;
};

/**
 * Parses a config document, applies `overrides` ("section.key=value", left to
 * right) and validates the result. Throws ConfigError with `origin:line:`
 * diagnostics or the offending `[section].key` path.
 */
RunConfig parse_config(std::string_view text, std::string_view origin = "<config>",
                       const std::vector<std::string>& overrides = {});

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Full document with every key; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

}  // namespace morphnmpc
