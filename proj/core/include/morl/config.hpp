#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "morl/trainer.hpp"

namespace morl::config {

/// section -> key -> value, parsed from "key=value" lines under "[section]"
/// headers. '#' and ';' start comments. Unknown keys are errors at apply time.
using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

ConfigMap parse_config_file(const std::string& path);
ConfigMap parse_config_text(const std::string& text, const std::string& origin);

/// Applies the [train] section onto a TrainConfig (unknown keys throw ConfigError).
void apply_train_section(const ConfigMap& cfg, train::TrainConfig* out);

/// Canonical key=value rendering of the fully resolved config (stable order).
std::string render_train_config(const train::TrainConfig& cfg);

std::string train_config_to_json(const train::TrainConfig& cfg);
train::TrainConfig train_config_from_json(const std::string& text);

/// FNV-1a 64-bit hash, hex-encoded; used as the config hash in artifacts.
std::string fnv1a_hex(const std::string& text);

/// Hash of the canonical rendering.
std::string config_hash(const train::TrainConfig& cfg);

} // namespace morl::config
