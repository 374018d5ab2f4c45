#pragma once

#include <string>
#include <vector>

#include "nonholo/config.hpp"

namespace nonholo {

struct PresetInfo {
    std::string name;
    std::string summary;
};

/// Built-in systems, each stored as canonical config text.
const std::vector<PresetInfo>& preset_catalog();

/// Config text for a named preset. Throws ConfigError for unknown names.
const std::string& preset_config_text(const std::string& name);

SystemConfig preset_config(const std::string& name);

} // namespace nonholo
