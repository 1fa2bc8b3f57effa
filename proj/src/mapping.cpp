#include "keyreconf/mapping.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "keyreconf/errors.hpp"

namespace keyreconf {
namespace {

constexpr int kDefaultChordWindowMs = 50;

bool in_scope(const std::string& scope, const Layer* layer) {
  return scope.empty() || (layer && layer->name == scope);
}

std::vector<std::string> key_codes(const KeySet& keys) {
  std::vector<std::string> out;
  for (const KeyId& k : keys) out.push_back(k.code());
  return out;
}

KeySet key_set(const nlohmann::json& arr) {
  KeySet out;
  for (const auto& v : arr) out.insert(KeyId(v.get<std::string>()));
  return out;
}

Rect union_rect(const KeyboardLayout& layout, const KeySet& keys) {
  Rect r;
  bool first = true;
  for (const KeyId& k : keys) {
    const Key* key = layout.find(k);
    if (!key) continue;
    r = first ? key->rect : r.united(key->rect);
    first = false;
  }
  return r;
}

std::size_t layer_index(const MappingProfile& profile, const std::string& name) {
  for (std::size_t i = 0; i < profile.layers.size(); ++i) {
    if (profile.layers[i].name == name) return i;
  }
  throw ParameterError("profile '" + profile.name + "' has no layer '" + name + "'");
}

const ChordRule* chord_rule_for(const MappingProfile& profile, const KeyId& a, const KeyId& b) {
  for (const ChordRule& r : profile.chord_rules) {
    if ((r.first == a && r.second == b) || (r.first == b && r.second == a)) return &r;
  }
  return nullptr;
}

bool is_chord_key(const MappingProfile& profile, const KeyId& key) {
  for (const ChordRule& r : profile.chord_rules) {
    if (r.first == key || r.second == key) return true;
  }
  return false;
}

int chord_window(const MappingProfile& profile, const KeyId& key) {
  int window = 0;
  for (const ChordRule& r : profile.chord_rules) {
    if (r.first == key || r.second == key) window = std::max(window, r.window_ms);
  }
  return window > 0 ? window : kDefaultChordWindowMs;
}

std::size_t chord_rank(const MappingProfile& profile, const KeyId& key) {
  auto it = std::find(profile.chord_order.begin(), profile.chord_order.end(), key);
  return static_cast<std::size_t>(it - profile.chord_order.begin());
}

// The single owner of `key` under the current layer: a shared group, an
// image map, or a layer binding, in that order.
std::optional<Action> lookup_action(const MappingProfile& profile, const EngineState& state,
                                    const KeyId& key) {
  const Layer* layer = effective_layer(profile, state);
  for (const SharedActionGroup& g : profile.shared_groups) {
    if (in_scope(g.layer, layer) && g.members.contains(key)) return g.action;
  }
  for (const ImageMap& m : profile.image_maps) {
    if (in_scope(m.layer, layer) && m.cell_of.contains(key)) return m.coordinate_of(key);
  }
  if (layer) {
    if (auto it = layer->bindings.find(key); it != layer->bindings.end()) return it->second;
  }
  return std::nullopt;
}

void emit(StepResult& out, std::int64_t t, const std::optional<Action>& action, std::vector<KeyId> keys) {
  if (action && !is_noop(*action)) out.actions.push_back(TimedAction{t, *action, std::move(keys)});
}

void emit_render(const MappingProfile& profile, EngineState& state, StepResult& out, std::int64_t t) {
  out.render = render(profile, state);
  out.render_t_ms = t;
}

StepResult close_cluster(const MappingProfile& profile, EngineState& state, std::int64_t stamp) {
  StepResult out;
  auto cluster = std::move(state.chord_cluster);
  state.chord_cluster.clear();
  if (cluster.empty()) return out;
  std::stable_sort(cluster.begin(), cluster.end(), [&](const auto& a, const auto& b) {
    if (a.t_ms != b.t_ms) return a.t_ms < b.t_ms;
    return chord_rank(profile, a.key) < chord_rank(profile, b.key);
  });
  if (cluster.size() == 2) {
    if (const ChordRule* rule = chord_rule_for(profile, cluster[0].key, cluster[1].key)) {
      emit(out, stamp, rule->combined, {cluster[0].key, cluster[1].key});
      return out;
    }
    out.warnings.push_back("keys " + cluster[0].key.code() + " and " + cluster[1].key.code() +
                           " pressed together are not a chord; emitted separately");
  } else if (cluster.size() > 2) {
    out.warnings.push_back(std::to_string(cluster.size()) +
                           " chord keys pressed together; emitted separately");
  }
  // Unmerged presses come out in key order.
  std::stable_sort(cluster.begin(), cluster.end(), [&](const auto& a, const auto& b) {
    return chord_rank(profile, a.key) < chord_rank(profile, b.key);
  });
  for (const auto& p : cluster) emit(out, stamp, lookup_action(profile, state, p.key), {p.key});
  return out;
}

std::optional<std::int64_t> cluster_deadline(const MappingProfile& profile, const EngineState& state) {
  if (state.chord_cluster.empty()) return std::nullopt;
  const auto& first = state.chord_cluster.front();
  return first.t_ms + chord_window(profile, first.key);
}

std::optional<std::int64_t> variant_deadline(const MappingProfile& profile, const EngineState& state) {
  if (!state.variant) return std::nullopt;
  return state.variant->since_ms + profile.variant_timeout_ms;
}

nlohmann::json action_map_to_json(const std::map<KeyId, Action>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, a] : m) j[k.code()] = action_to_json(a);
  return j;
}

nlohmann::json string_map_to_json(const std::map<KeyId, std::string>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[k.code()] = v;
  return j;
}

std::map<KeyId, std::string> string_map_from_json(const nlohmann::json& j) {
  std::map<KeyId, std::string> out;
  for (const auto& [k, v] : j.items()) out[KeyId(k)] = v.get<std::string>();
  return out;
}

}  // namespace

std::string to_string(Edge edge) { return edge == Edge::Down ? "down" : "up"; }

Edge edge_from_string(const std::string& s) {
  if (s == "down") return Edge::Down;
  if (s == "up") return Edge::Up;
  throw EventError("unknown edge '" + s + "'");
}

nlohmann::json event_to_json(const KeyEvent& e) {
  return {{"t_ms", e.t_ms}, {"key", e.key.code()}, {"edge", to_string(e.edge)}};
}

KeyEvent event_from_json(const nlohmann::json& doc) {
  try {
    return KeyEvent{doc.at("t_ms").get<std::int64_t>(), KeyId(doc.at("key").get<std::string>()),
                    edge_from_string(doc.at("edge").get<std::string>())};
  } catch (const nlohmann::json::exception& e) {
    throw EventError(std::string("malformed key event: ") + e.what());
  }
}

Coordinate ImageMap::coordinate_of(const KeyId& key) const {
  const auto& [r, c] = cell_of.at(key);
  return Coordinate{(c + 0.5) / cols, (r + 0.5) / rows};
}

const Layer* MappingProfile::layer_named(const std::string& n) const {
  for (const Layer& l : layers) {
    if (l.name == n) return &l;
  }
  return nullptr;
}

const LayerCycle* MappingProfile::cycle_named(const std::string& n) const {
  for (const LayerCycle& c : cycles) {
    if (c.name == n) return &c;
  }
  return nullptr;
}

ImageMap build_image_map(const KeySet& group, const KeyboardLayout& layout) {
  if (group.empty()) throw ParameterError("image map group is empty");
  std::map<int, std::vector<KeyId>> rows;
  for (const KeyId& id : group) rows[layout.at(id).row].push_back(id);
  ImageMap map;
  map.group = group;
  map.rows = static_cast<int>(rows.size());
  int r = 0;
  for (auto& [row, keys] : rows) {
    std::sort(keys.begin(), keys.end(), [&](const KeyId& a, const KeyId& b) {
      return layout.at(a).rect.x < layout.at(b).rect.x;
    });
    map.cols = std::max(map.cols, static_cast<int>(keys.size()));
    for (std::size_t c = 0; c < keys.size(); ++c) map.cell_of[keys[c]] = {r, static_cast<int>(c)};
    ++r;
  }
  return map;
}

const Layer* effective_layer(const MappingProfile& profile, const EngineState& state) {
  std::optional<std::string> target;
  if (state.latched) {
    target = profile.modifier_rules.at(*state.latched);
  } else if (!state.modifier_stack.empty()) {
    target = profile.modifier_rules.at(state.modifier_stack.back());
  }
  if (!target) {
    return state.base_layer < profile.layers.size() ? &profile.layers[state.base_layer] : nullptr;
  }
  if (const LayerCycle* cycle = profile.cycle_named(*target)) {
    auto it = state.cycle_pos.find(cycle->name);
    std::size_t pos = it == state.cycle_pos.end() ? 0 : it->second;
    return pos < cycle->layers.size() ? profile.layer_named(cycle->layers[pos]) : nullptr;
  }
  return profile.layer_named(*target);
}

EngineState initial_state(const MappingProfile& profile) {
  EngineState s;
  s.base_layer = profile.active_layer;
  for (const LayerCycle& c : profile.cycles) {
    std::size_t pos = 0;
    if (c.sets_base && profile.active_layer < profile.layers.size()) {
      const std::string& base = profile.layers[profile.active_layer].name;
      auto it = std::find(c.layers.begin(), c.layers.end(), base);
      if (it != c.layers.end()) pos = static_cast<std::size_t>(it - c.layers.begin());
    }
    s.cycle_pos[c.name] = pos;
  }
  return s;
}

void StepResult::append(StepResult&& later) {
  actions.insert(actions.end(), std::make_move_iterator(later.actions.begin()),
                 std::make_move_iterator(later.actions.end()));
  warnings.insert(warnings.end(), std::make_move_iterator(later.warnings.begin()),
                  std::make_move_iterator(later.warnings.end()));
  if (later.render) {
    render = std::move(later.render);
    render_t_ms = later.render_t_ms;
  }
}

RenderState render(const MappingProfile& profile, EngineState& state) {
  const KeyboardLayout& layout = *profile.layout;
  const Layer* layer = effective_layer(profile, state);
  RenderState out;
  out.version = ++state.render_version;
  out.geometry = profile.render_hint;

  std::set<int> active_rows;
  KeySet interactive(profile.chord_order.begin(), profile.chord_order.end());
  if (layer) {
    for (const auto& [k, a] : layer->bindings) interactive.insert(k);
  }
  for (const KeyId& k : interactive) {
    if (const Key* key = layout.find(k)) active_rows.insert(key->row);
  }

  for (const Key& key : layout.keys()) {
    KeyVisual v;
    v.glyph = key.default_legend;
    if (layer) {
      if (auto it = layer->legends.find(key.id); it != layer->legends.end()) {
        v.glyph = it->second;
      } else if (auto b = layer->bindings.find(key.id); b != layer->bindings.end()) {
        if (const auto* text = std::get_if<EmitText>(&b->second)) v.glyph = text->text;
      }
      if (auto h = layer->highlights.find(key.id); h != layer->highlights.end()) v.highlight = h->second;
    }
    if (state.variant) {
      if (auto o = state.variant->options.find(key.id); o != state.variant->options.end()) {
        v.glyph = o->second;
        v.highlight = "green";
      }
    }
    if (auto a = state.app_highlights.find(key.id); a != state.app_highlights.end()) v.highlight = a->second;
    switch (profile.render_hint) {
      case RenderHint::FullKeyboard:
        v.visible = true;
        break;
      case RenderHint::OneRowWithBounds:
        v.visible = active_rows.contains(key.row);
        break;
      case RenderHint::GeometryOnly:
        v.visible = false;
        break;
    }
    out.per_key.emplace(key.id, std::move(v));
  }

  for (const SharedActionGroup& g : profile.shared_groups) {
    if (in_scope(g.layer, layer)) out.overlays.push_back({union_rect(layout, g.members), "image", g.overlay});
  }
  for (const ImageMap& m : profile.image_maps) {
    if (in_scope(m.layer, layer)) out.overlays.push_back({union_rect(layout, m.group), "image", m.overlay});
  }
  if (profile.render_hint == RenderHint::OneRowWithBounds) {
    out.overlays.push_back({layout.bounds(), "bounds", profile.bounds_colour});
  } else if (profile.render_hint == RenderHint::GeometryOnly && !interactive.empty()) {
    out.overlays.push_back({union_rect(layout, interactive), "slider", "timeline"});
  }
  return out;
}

std::optional<std::int64_t> next_deadline(const MappingProfile& profile, const EngineState& state) {
  auto a = cluster_deadline(profile, state);
  auto b = variant_deadline(profile, state);
  if (a && b) return std::min(*a, *b);
  return a ? a : b;
}

StepResult resolve_chords(const MappingProfile& profile, EngineState& state, std::int64_t now_ms) {
  StepResult out;
  // Handle deadlines in time order so stamps stay non-decreasing.
  for (;;) {
    auto chord_due = cluster_deadline(profile, state);
    auto variant_due = variant_deadline(profile, state);
    const bool chord_ready = chord_due && *chord_due <= now_ms;
    const bool variant_ready = variant_due && *variant_due <= now_ms;
    if (!chord_ready && !variant_ready) break;
    if (chord_ready && (!variant_ready || *chord_due <= *variant_due)) {
      state.clock_ms = std::max(state.clock_ms, *chord_due);
      out.append(close_cluster(profile, state, *chord_due));
    } else {
      state.clock_ms = std::max(state.clock_ms, *variant_due);
      state.variant.reset();
      emit_render(profile, state, out, *variant_due);
    }
  }
  return out;
}

StepResult apply_event(const MappingProfile& profile, EngineState& state, const KeyEvent& event) {
  if (!profile.layout->contains(event.key)) {
    throw EventError("key '" + event.key.code() + "' is not on layout " + profile.layout->name());
  }
  if (event.t_ms < state.clock_ms) {
    throw EventError("event at " + std::to_string(event.t_ms) + " ms is earlier than session time " +
                     std::to_string(state.clock_ms) + " ms");
  }
  StepResult out = resolve_chords(profile, state, event.t_ms);
  state.clock_ms = event.t_ms;
  const std::int64_t t = event.t_ms;
  const KeyId& key = event.key;

  if (event.edge == Edge::Up) {
    if (!state.held.erase(key)) {
      out.warnings.push_back("release of " + key.code() + " without a press ignored");
      return out;
    }
    auto it = std::find(state.modifier_stack.begin(), state.modifier_stack.end(), key);
    if (it != state.modifier_stack.end()) {
      state.modifier_stack.erase(it);
      emit_render(profile, state, out, t);
    }
    return out;
  }

  if (!state.held.insert(key).second) {
    out.warnings.push_back("repeated press of " + key.code() + " ignored");
    return out;
  }

  if (profile.modifier_rules.contains(key)) {
    if (profile.latch_modifiers) {
      state.latched = state.latched == key ? std::nullopt : std::optional<KeyId>(key);
    } else {
      state.modifier_stack.push_back(key);
    }
    emit_render(profile, state, out, t);
    return out;
  }

  const bool chord_key = is_chord_key(profile, key);
  if (!chord_key && !state.chord_cluster.empty()) {
    // A later non-chord press settles the open chord first.
    out.append(close_cluster(profile, state, t));
  }

  for (const LayerCycle& cycle : profile.cycles) {
    if (key != cycle.next && key != cycle.prev) continue;
    if (cycle.modifier && !state.held.contains(*cycle.modifier)) continue;
    const std::size_t count = cycle.layers.size();
    std::size_t pos = state.cycle_pos[cycle.name];
    if (key == cycle.next) {
      pos = pos + 1 < count ? pos + 1 : (cycle.wrap ? 0 : pos);
    } else {
      pos = pos > 0 ? pos - 1 : (cycle.wrap ? count - 1 : pos);
    }
    state.cycle_pos[cycle.name] = pos;
    if (cycle.sets_base) state.base_layer = layer_index(profile, cycle.layers[pos]);
    emit(out, t, Command{"page", {cycle.name, std::to_string(pos)}}, {key});
    emit_render(profile, state, out, t);
    return out;
  }

  if (state.variant) {
    auto option = state.variant->options.find(key);
    if (option != state.variant->options.end()) {
      emit(out, t, EmitText{option->second}, {key});
      state.variant.reset();
      emit_render(profile, state, out, t);
      return out;
    }
    state.variant.reset();
    emit_render(profile, state, out, t);
  }

  for (const VariantRule& rule : profile.variant_rules) {
    if (rule.base != key || !state.held.contains(rule.trigger)) continue;
    EngineState::VariantPrompt prompt{key, {}, t};
    for (const auto& [k, text] : rule.options) prompt.options[k] = text;
    state.variant = std::move(prompt);
    emit_render(profile, state, out, t);
    return out;
  }

  if (chord_key) {
    state.chord_cluster.push_back({key, t});
    return out;
  }

  emit(out, t, lookup_action(profile, state, key), {key});
  return out;
}

std::vector<Diagnostic> validate_profile(const MappingProfile& profile) {
  std::vector<Diagnostic> diags;
  auto diag = [&](std::string where, std::string what) {
    diags.push_back({std::move(where), std::move(what)});
  };
  if (!profile.layout) {
    diag("profile", "no layout");
    return diags;
  }
  const KeyboardLayout& layout = *profile.layout;
  if (profile.layers.empty()) {
    diag("profile", "no active layer: profile has no layers");
  } else if (profile.active_layer >= profile.layers.size()) {
    diag("profile", "active layer index " + std::to_string(profile.active_layer) + " out of range");
  }

  auto check_action = [&](const std::string& where, const Action& a) {
    if (const auto* c = std::get_if<Coordinate>(&a)) {
      if (c->u < 0.0 || c->u > 1.0 || c->v < 0.0 || c->v > 1.0) diag(where, "coordinate outside [0,1]^2");
    }
    if (const auto* s = std::get_if<SeekTo>(&a)) {
      if (s->seconds < 0.0) diag(where, "negative seek target");
    }
  };
  auto check_key = [&](const std::string& where, const KeyId& k) {
    if (!layout.contains(k)) diag(where, "key '" + k.code() + "' is not on layout " + layout.name());
  };

  std::set<std::string> names;
  for (const Layer& l : profile.layers) {
    const std::string where = "layer " + l.name;
    if (!names.insert(l.name).second) diag(where, "duplicate layer name");
    for (const auto& [k, a] : l.bindings) {
      check_key(where, k);
      check_action(where + "/" + k.code(), a);
      if (profile.modifier_rules.contains(k)) diag(where + "/" + k.code(), "modifier key is also bound");
    }
    for (const auto& [k, g] : l.legends) {
      check_key(where, k);
      if (!l.bindings.contains(k)) diag(where + "/" + k.code(), "legend without a binding");
    }
  }

  for (std::size_t i = 0; i < profile.shared_groups.size(); ++i) {
    const SharedActionGroup& g = profile.shared_groups[i];
    const std::string where = "shared group " + std::to_string(i);
    if (g.members.size() < 2) diag(where, "needs at least 2 keys");
    for (const KeyId& k : g.members) check_key(where, k);
    check_action(where, g.action);
    if (!g.layer.empty() && !profile.layer_named(g.layer)) diag(where, "unknown layer '" + g.layer + "'");
    for (std::size_t j = i + 1; j < profile.shared_groups.size(); ++j) {
      const SharedActionGroup& h = profile.shared_groups[j];
      if (!(g.layer.empty() || h.layer.empty() || g.layer == h.layer)) continue;
      for (const KeyId& k : g.members) {
        if (h.members.contains(k)) {
          diag(where, "key " + k.code() + " also in shared group " + std::to_string(j));
        }
      }
    }
  }

  for (std::size_t i = 0; i < profile.image_maps.size(); ++i) {
    const ImageMap& m = profile.image_maps[i];
    const std::string where = "image map " + std::to_string(i);
    std::set<std::pair<int, int>> cells;
    for (const KeyId& k : m.group) {
      check_key(where, k);
      if (!m.cell_of.contains(k)) diag(where, "key " + k.code() + " has no cell");
    }
    for (const auto& [k, cell] : m.cell_of) {
      if (!m.group.contains(k)) diag(where, "cell for key " + k.code() + " outside the group");
      if (cell.first < 0 || cell.first >= m.rows || cell.second < 0 || cell.second >= m.cols) {
        diag(where, "cell of " + k.code() + " outside the grid");
      }
      if (!cells.insert(cell).second) diag(where, "two keys share a cell at " + k.code());
    }
    for (const SharedActionGroup& g : profile.shared_groups) {
      if (!(g.layer.empty() || m.layer.empty() || g.layer == m.layer)) continue;
      for (const KeyId& k : g.members) {
        if (m.group.contains(k)) diag(where, "key " + k.code() + " is also in a shared group");
      }
    }
  }

  // Disjoint ownership: a key bound on a layer may not also belong to a
  // shared group or image map active on that layer.
  for (const Layer& l : profile.layers) {
    for (const auto& [k, a] : l.bindings) {
      for (const SharedActionGroup& g : profile.shared_groups) {
        if (in_scope(g.layer, &l) && g.members.contains(k)) {
          diag("layer " + l.name + "/" + k.code(), "ownership conflict with a shared group");
        }
      }
      for (const ImageMap& m : profile.image_maps) {
        if (in_scope(m.layer, &l) && m.group.contains(k)) {
          diag("layer " + l.name + "/" + k.code(), "ownership conflict with an image map");
        }
      }
    }
  }

  for (const auto& [mod, target] : profile.modifier_rules) {
    check_key("modifier " + mod.code(), mod);
    if (!profile.layer_named(target) && !profile.cycle_named(target)) {
      diag("modifier " + mod.code(), "unknown target '" + target + "'");
    }
  }

  for (const LayerCycle& c : profile.cycles) {
    const std::string where = "cycle " + c.name;
    if (c.layers.empty()) diag(where, "no layers");
    for (const std::string& n : c.layers) {
      if (!profile.layer_named(n)) diag(where, "unknown layer '" + n + "'");
    }
    check_key(where, c.next);
    check_key(where, c.prev);
    if (c.modifier) check_key(where, *c.modifier);
  }

  for (const ChordRule& r : profile.chord_rules) {
    const std::string where = "chord " + r.first.code() + "+" + r.second.code();
    check_key(where, r.first);
    check_key(where, r.second);
    check_action(where, r.combined);
    if (r.window_ms <= 0) diag(where, "window must be positive");
    const std::size_t a = chord_rank(profile, r.first);
    const std::size_t b = chord_rank(profile, r.second);
    if (a >= profile.chord_order.size() || b >= profile.chord_order.size()) {
      diag(where, "keys missing from chord order");
    } else if ((a > b ? a - b : b - a) != 1) {
      diag(where, "keys are not adjacent in chord order");
    }
  }

  for (const VariantRule& v : profile.variant_rules) {
    const std::string where = "variants " + v.trigger.code() + "+" + v.base.code();
    check_key(where, v.trigger);
    check_key(where, v.base);
    for (const auto& [k, text] : v.options) {
      check_key(where, k);
      if (layout.contains(k) && layout.contains(v.base) && !layout.adjacent(k, v.base)) {
        diag(where, "option key " + k.code() + " is not next to " + v.base.code());
      }
    }
  }
  if (profile.variant_timeout_ms <= 0) diag("profile", "variant timeout must be positive");
  return diags;
}

nlohmann::json profile_to_json(const MappingProfile& profile) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& l : profile.layers) {
    layers.push_back({{"name", l.name},
                      {"bindings", action_map_to_json(l.bindings)},
                      {"legends", string_map_to_json(l.legends)},
                      {"highlights", string_map_to_json(l.highlights)}});
  }
  nlohmann::json modifiers = nlohmann::json::object();
  for (const auto& [k, v] : profile.modifier_rules) modifiers[k.code()] = v;
  nlohmann::json groups = nlohmann::json::array();
  for (const SharedActionGroup& g : profile.shared_groups) {
    groups.push_back({{"members", key_codes(g.members)},
                      {"action", action_to_json(g.action)},
                      {"overlay", g.overlay},
                      {"layer", g.layer}});
  }
  nlohmann::json maps = nlohmann::json::array();
  for (const ImageMap& m : profile.image_maps) {
    nlohmann::json cells = nlohmann::json::object();
    for (const auto& [k, c] : m.cell_of) cells[k.code()] = {c.first, c.second};
    maps.push_back({{"group", key_codes(m.group)},
                    {"grid", {m.rows, m.cols}},
                    {"cells", std::move(cells)},
                    {"overlay", m.overlay},
                    {"layer", m.layer}});
  }
  nlohmann::json order = nlohmann::json::array();
  for (const KeyId& k : profile.chord_order) order.push_back(k.code());
  nlohmann::json rules = nlohmann::json::array();
  for (const ChordRule& r : profile.chord_rules) {
    rules.push_back({{"keys", {r.first.code(), r.second.code()}},
                     {"action", action_to_json(r.combined)},
                     {"window_ms", r.window_ms}});
  }
  nlohmann::json cycles = nlohmann::json::array();
  for (const LayerCycle& c : profile.cycles) {
    nlohmann::json j{{"name", c.name},
                     {"layers", c.layers},
                     {"next", c.next.code()},
                     {"prev", c.prev.code()},
                     {"wrap", c.wrap},
                     {"sets_base", c.sets_base}};
    if (c.modifier) j["modifier"] = c.modifier->code();
    cycles.push_back(std::move(j));
  }
  nlohmann::json variants = nlohmann::json::array();
  for (const VariantRule& v : profile.variant_rules) {
    nlohmann::json opts = nlohmann::json::array();
    for (const auto& [k, text] : v.options) opts.push_back({k.code(), text});
    variants.push_back({{"trigger", v.trigger.code()}, {"base", v.base.code()}, {"options", std::move(opts)}});
  }
  return {{"format", "keyreconf-profile"},
          {"version", MappingProfile::kFormatVersion},
          {"name", profile.name},
          {"layout", profile.layout ? profile.layout->name() : ""},
          {"layers", std::move(layers)},
          {"active_layer", profile.active_layer},
          {"modifiers", std::move(modifiers)},
          {"latch_modifiers", profile.latch_modifiers},
          {"shared_groups", std::move(groups)},
          {"image_maps", std::move(maps)},
          {"chords", {{"order", std::move(order)}, {"rules", std::move(rules)}}},
          {"cycles", std::move(cycles)},
          {"variants", std::move(variants)},
          {"variant_timeout_ms", profile.variant_timeout_ms},
          {"render_hint", to_string(profile.render_hint)},
          {"bounds_colour", profile.bounds_colour}};
}

MappingProfile profile_from_json(const nlohmann::json& doc, const LayoutResolver& resolve_layout) {
  try {
    if (doc.value("format", "") != "keyreconf-profile") throw SpecError("not a profile document");
    if (doc.value("version", 0) != MappingProfile::kFormatVersion) {
      throw SpecError("unsupported profile version");
    }
    MappingProfile p;
    p.name = doc.at("name").get<std::string>();
    p.layout = resolve_layout(doc.at("layout").get<std::string>());
    if (!p.layout) throw SpecError("unknown layout '" + doc.at("layout").get<std::string>() + "'");
    for (const auto& jl : doc.value("layers", nlohmann::json::array())) {
      Layer l;
      l.name = jl.at("name").get<std::string>();
      const nlohmann::json bindings = jl.value("bindings", nlohmann::json::object());
      for (const auto& [k, a] : bindings.items()) {
        l.bindings[KeyId(k)] = action_from_json(a);
      }
      l.legends = string_map_from_json(jl.value("legends", nlohmann::json::object()));
      l.highlights = string_map_from_json(jl.value("highlights", nlohmann::json::object()));
      p.layers.push_back(std::move(l));
    }
    p.active_layer = doc.value("active_layer", std::size_t{0});
    p.modifier_rules = string_map_from_json(doc.value("modifiers", nlohmann::json::object()));
    p.latch_modifiers = doc.value("latch_modifiers", false);
    for (const auto& jg : doc.value("shared_groups", nlohmann::json::array())) {
      p.shared_groups.push_back(SharedActionGroup{key_set(jg.at("members")), action_from_json(jg.at("action")),
                                                  jg.value("overlay", ""), jg.value("layer", "")});
    }
    for (const auto& jm : doc.value("image_maps", nlohmann::json::array())) {
      ImageMap m;
      m.group = key_set(jm.at("group"));
      m.rows = jm.at("grid").at(0).get<int>();
      m.cols = jm.at("grid").at(1).get<int>();
      for (const auto& [k, c] : jm.at("cells").items()) {
        m.cell_of[KeyId(k)] = {c.at(0).get<int>(), c.at(1).get<int>()};
      }
      m.overlay = jm.value("overlay", "");
      m.layer = jm.value("layer", "");
      p.image_maps.push_back(std::move(m));
    }
    if (doc.contains("chords")) {
      const auto& jc = doc.at("chords");
      for (const auto& k : jc.value("order", nlohmann::json::array())) p.chord_order.emplace_back(k.get<std::string>());
      for (const auto& jr : jc.value("rules", nlohmann::json::array())) {
        p.chord_rules.push_back(ChordRule{KeyId(jr.at("keys").at(0).get<std::string>()),
                                          KeyId(jr.at("keys").at(1).get<std::string>()),
                                          action_from_json(jr.at("action")),
                                          jr.value("window_ms", kDefaultChordWindowMs)});
      }
    }
    for (const auto& jc : doc.value("cycles", nlohmann::json::array())) {
      LayerCycle c;
      c.name = jc.at("name").get<std::string>();
      c.layers = jc.at("layers").get<std::vector<std::string>>();
      c.next = KeyId(jc.at("next").get<std::string>());
      c.prev = KeyId(jc.at("prev").get<std::string>());
      if (jc.contains("modifier")) c.modifier = KeyId(jc.at("modifier").get<std::string>());
      c.wrap = jc.value("wrap", false);
      c.sets_base = jc.value("sets_base", false);
      p.cycles.push_back(std::move(c));
    }
    for (const auto& jv : doc.value("variants", nlohmann::json::array())) {
      VariantRule v;
      v.trigger = KeyId(jv.at("trigger").get<std::string>());
      v.base = KeyId(jv.at("base").get<std::string>());
      for (const auto& o : jv.at("options")) {
        v.options.emplace_back(KeyId(o.at(0).get<std::string>()), o.at(1).get<std::string>());
      }
      p.variant_rules.push_back(std::move(v));
    }
    p.variant_timeout_ms = doc.value("variant_timeout_ms", 3000);
    p.render_hint = render_hint_from_string(doc.value("render_hint", "full_keyboard"));
    p.bounds_colour = doc.value("bounds_colour", "red");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed profile document: ") + e.what());
  }
}

}  // namespace keyreconf
