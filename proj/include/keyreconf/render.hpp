#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "keyreconf/layout.hpp"

namespace keyreconf {

// How the UI draws the keyboard itself.
enum class RenderHint { FullKeyboard, OneRowWithBounds, GeometryOnly };

std::string to_string(RenderHint hint);
RenderHint render_hint_from_string(const std::string& s);

struct KeyVisual {
  std::string glyph;
  std::string highlight;  // colour name, empty when not highlighted
  bool visible = true;
  friend bool operator==(const KeyVisual&, const KeyVisual&) = default;
};

// Augmentation drawn on or around an area of the keyboard.
struct Overlay {
  Rect area;
  std::string kind;        // "image", "slider", "bounds", ...
  std::string descriptor;  // asset path, colour or label
  friend bool operator==(const Overlay& a, const Overlay& b) {
    return a.area.x == b.area.x && a.area.y == b.area.y && a.area.width == b.area.width &&
           a.area.height == b.area.height && a.kind == b.kind && a.descriptor == b.descriptor;
  }
};

struct RenderState {
  std::uint64_t version = 0;
  std::map<KeyId, KeyVisual> per_key;
  std::vector<Overlay> overlays;
  RenderHint geometry = RenderHint::FullKeyboard;
};

nlohmann::json render_to_json(const RenderState& state);
RenderState render_from_json(const nlohmann::json& doc);

}  // namespace keyreconf
