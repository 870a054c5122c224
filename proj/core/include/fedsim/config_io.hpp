#pragma once

#include <filesystem>
#include <string>

#include "fedsim/engine.hpp"

namespace fedsim {

/// Parses an experiment config (schema documented in the README). Every
/// field is optional and defaults apply; unknown keys are rejected so typos
/// fail loudly. partition.num_classes / num_features default to the task's
/// values when absent.
ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);

/// Applies one "dotted.key=value" override (e.g. aggregation.strategy=simagg
/// or rounds=5). Unknown keys raise BadConfig.
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

/// Full JSON config echo, defaults included. parse(config_to_string(c)) == c.
std::string config_to_string(const ExperimentConfig& cfg);

}  // namespace fedsim
