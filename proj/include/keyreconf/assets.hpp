#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "json.hpp"
#include "keyreconf/layout.hpp"

namespace keyreconf {

// $KEYRECONF_ASSETS if set, else the source tree's assets/ directory.
std::filesystem::path assets_dir();

// Reads a JSON document relative to assets_dir(). Throws SpecError.
nlohmann::json load_asset_json(const std::filesystem::path& relative);

// "ansi104", "iso105", or a path to a .layout/.json file. Bundled layouts
// are parsed once and shared.
std::shared_ptr<const KeyboardLayout> bundled_layout(const std::string& name_or_path);

}  // namespace keyreconf
