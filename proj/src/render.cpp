#include "keyreconf/render.hpp"

#include "keyreconf/errors.hpp"

namespace keyreconf {

std::string to_string(RenderHint hint) {
  switch (hint) {
    case RenderHint::FullKeyboard:
      return "full_keyboard";
    case RenderHint::OneRowWithBounds:
      return "one_row_with_bounds";
    case RenderHint::GeometryOnly:
      return "geometry_only";
  }
  return "full_keyboard";
}

RenderHint render_hint_from_string(const std::string& s) {
  if (s == "full_keyboard") return RenderHint::FullKeyboard;
  if (s == "one_row_with_bounds") return RenderHint::OneRowWithBounds;
  if (s == "geometry_only") return RenderHint::GeometryOnly;
  throw SpecError("unknown render hint '" + s + "'");
}

nlohmann::json render_to_json(const RenderState& state) {
  nlohmann::json per_key = nlohmann::json::object();
  for (const auto& [id, v] : state.per_key) {
    nlohmann::json j{{"glyph", v.glyph}, {"visible", v.visible}};
    if (!v.highlight.empty()) j["highlight"] = v.highlight;
    per_key[id.code()] = std::move(j);
  }
  nlohmann::json overlays = nlohmann::json::array();
  for (const Overlay& o : state.overlays) {
    overlays.push_back({{"area", {o.area.x, o.area.y, o.area.width, o.area.height}},
                        {"kind", o.kind},
                        {"descriptor", o.descriptor}});
  }
  return {{"version", state.version},
          {"per_key", std::move(per_key)},
          {"overlays", std::move(overlays)},
          {"geometry", to_string(state.geometry)}};
}

RenderState render_from_json(const nlohmann::json& doc) {
  RenderState s;
  s.version = doc.at("version").get<std::uint64_t>();
  for (const auto& [id, v] : doc.at("per_key").items()) {
    s.per_key[KeyId(id)] = KeyVisual{v.at("glyph").get<std::string>(), v.value("highlight", ""),
                                     v.value("visible", true)};
  }
  for (const auto& o : doc.at("overlays")) {
    const auto& a = o.at("area");
    s.overlays.push_back(Overlay{{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>(),
                                  a.at(3).get<double>()},
                                 o.at("kind").get<std::string>(),
                                 o.at("descriptor").get<std::string>()});
  }
  s.geometry = render_hint_from_string(doc.at("geometry").get<std::string>());
  return s;
}

}  // namespace keyreconf
