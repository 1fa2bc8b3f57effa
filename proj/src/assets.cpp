#include "keyreconf/assets.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>

#include "keyreconf/errors.hpp"

#ifndef KEYRECONF_DEFAULT_ASSETS
#define KEYRECONF_DEFAULT_ASSETS "assets"
#endif

namespace keyreconf {

std::filesystem::path assets_dir() {
  if (const char* env = std::getenv("KEYRECONF_ASSETS"); env && *env) return env;
  return KEYRECONF_DEFAULT_ASSETS;
}

nlohmann::json load_asset_json(const std::filesystem::path& relative) {
  const auto path = assets_dir() / relative;
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open asset " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError("bad JSON in " + path.string() + ": " + e.what());
  }
}

std::shared_ptr<const KeyboardLayout> bundled_layout(const std::string& name_or_path) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<const KeyboardLayout>> cache;
  std::lock_guard lock(mutex);
  std::filesystem::path path = name_or_path;
  if (!path.has_extension()) {
    // Accept the display name too: "ANSI-104" -> ansi104.layout.
    std::string stem;
    for (char c : name_or_path) {
      if (std::isalnum(static_cast<unsigned char>(c))) stem += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    path = assets_dir() / "layouts" / (stem + ".layout");
  }
  if (auto it = cache.find(path.string()); it != cache.end()) return it->second;
  auto layout = std::make_shared<const KeyboardLayout>(load_layout(path));
  cache.emplace(path.string(), layout);
  return layout;
}

}  // namespace keyreconf
