#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "quadloco/sim.hpp"

namespace quadloco {

struct Config {
  sim::SimConfig sim;
  sim::NoiseModel noise;

  /// Re-raises any module precondition failure as a config error.
  void validate() const;
};

/// Dotted names of every accepted key, e.g. "traj.margin".
std::vector<std::string> config_keys();

/// Applies the keys of a JSON document on top of `base`. Unknown keys and mistyped values are config errors.
Config apply_config(const Config& base, const std::string& json_text);
Config load_config(const std::filesystem::path& file, const Config& base = {});

/// Sets one key from its text form, as given on the command line.
void set_config_value(Config& config, const std::string& key, const std::string& value);

/// Defaults, then the file when given, then each override in order; validated once at the end.
Config layered_config(const std::filesystem::path& file,
                      const std::vector<std::pair<std::string, std::string>>& overrides);

/// Complete document with every key.
std::string dump_config(const Config& config);

}  // namespace quadloco
