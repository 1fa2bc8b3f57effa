#include "keyreconf/app_profiles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "keyreconf/assets.hpp"
#include "keyreconf/errors.hpp"

namespace keyreconf {
namespace {

const KeyId kCtrl("ControlLeft");
const KeyId kAlt("AltLeft");
const KeyId kPageUp("PageUp");
const KeyId kPageDown("PageDown");

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

// Letters, digits and main-block punctuation type their own legend.
Layer text_layer(const KeyboardLayout& layout, std::string name) {
  Layer l;
  l.name = std::move(name);
  KeySet keys = letter_keys(layout);
  keys.merge(digit_keys(layout));
  for (const char* code : {"Minus", "Equal", "BracketLeft", "BracketRight", "Semicolon", "Quote",
                           "Comma", "Period", "Slash", "Backquote", "Backslash"}) {
    if (layout.contains(KeyId(code))) keys.insert(KeyId(code));
  }
  for (const KeyId& k : keys) l.bindings[k] = EmitText{layout.at(k).default_legend};
  if (layout.contains(KeyId("Space"))) l.bindings[KeyId("Space")] = EmitText{" "};
  return l;
}

std::vector<KeyId> digit_row(const KeyboardLayout& layout) {
  std::vector<KeyId> out;
  for (const char* code : {"Digit1", "Digit2", "Digit3", "Digit4", "Digit5", "Digit6", "Digit7", "Digit8",
                           "Digit9", "Digit0"}) {
    if (layout.contains(KeyId(code))) out.emplace_back(code);
  }
  return out;
}

KeySet default_paged_keys(PagedKind kind, const KeyboardLayout& layout) {
  KeySet keys;
  switch (kind) {
    case PagedKind::Emoji:
      keys = letter_keys(layout);
      keys.merge(digit_keys(layout));
      for (const char* code : {"Minus", "Equal", "BracketLeft", "BracketRight"}) {
        if (layout.contains(KeyId(code))) keys.insert(KeyId(code));
      }
      break;
    case PagedKind::Bookmark: {
      auto row = digit_row(layout);
      keys.insert(row.begin(), row.end());
      break;
    }
    case PagedKind::Photo:
    case PagedKind::Window:
      for (const Key& k : layout.keys()) keys.insert(k.id);
      break;
  }
  return keys;
}

bool per_key_kind(PagedKind kind) { return kind == PagedKind::Emoji || kind == PagedKind::Bookmark; }

// Keys that can carry items once the page keys are set aside.
KeySet item_keys(PagedKind kind, const PagedSetCfg& cfg, const KeyboardLayout& layout) {
  KeySet keys = cfg.keys.empty() ? default_paged_keys(kind, layout) : cfg.keys;
  for (const KeyId& k : keys) require(layout.contains(k), "key '" + k.code() + "' not on layout");
  if (!per_key_kind(kind) && cfg.items.size() > keys.size()) {
    keys.erase(kPageUp);
    keys.erase(kPageDown);
  }
  return keys;
}

std::string page_label(PagedKind kind) {
  switch (kind) {
    case PagedKind::Emoji: return "emoji";
    case PagedKind::Photo: return "photos";
    case PagedKind::Window: return "windows";
    case PagedKind::Bookmark: return "bookmarks";
  }
  return "items";
}

std::vector<std::string> json_strings(const nlohmann::json& arr) {
  return arr.get<std::vector<std::string>>();
}

std::string format_seconds(double s) {
  std::ostringstream out;
  out << s << "s";
  return out.str();
}

std::vector<Cell> grid_cells(const ImageMap& grid) {
  std::vector<Cell> cells;
  for (const auto& [k, c] : grid.cell_of) cells.push_back(c);
  std::sort(cells.begin(), cells.end());
  return cells;
}

std::int64_t sample_interval(Rng& rng, double mean_ms) {
  const double u = rng.uniform();
  const double dt = -mean_ms * std::log1p(-u);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(dt)));
}

std::vector<std::string> cell_args(const Cell& c) { return {std::to_string(c.first), std::to_string(c.second)}; }

}  // namespace

std::string to_string(TouchBarVariant v) {
  switch (v) {
    case TouchBarVariant::Highlight: return "highlight";
    case TouchBarVariant::OneRow: return "one_row";
    case TouchBarVariant::Invisible: return "invisible";
  }
  return "highlight";
}

TouchBarVariant touchbar_variant_from_string(const std::string& s) {
  if (s == "highlight" || s == "VTHighlight") return TouchBarVariant::Highlight;
  if (s == "one_row" || s == "VTOneRow") return TouchBarVariant::OneRow;
  if (s == "invisible" || s == "VTInvisible") return TouchBarVariant::Invisible;
  throw ParameterError("unknown touch bar variant '" + s + "'");
}

MappingProfile build_touchbar(const TouchBarProfileCfg& cfg, std::shared_ptr<const KeyboardLayout> layout) {
  require(layout != nullptr, "touch bar needs a layout");
  require(cfg.num_keys >= 2, "touch bar needs at least 2 keys");
  require(cfg.media_length_s > 0.0, "media length must be positive");
  require(cfg.chord_window_ms > 0, "chord window must be positive");
  const auto row = digit_row(*layout);
  require(static_cast<int>(row.size()) >= cfg.num_keys,
          "layout digit row has " + std::to_string(row.size()) + " keys, need " + std::to_string(cfg.num_keys));

  MappingProfile p;
  p.name = "virtual_touchbar";
  p.layout = layout;
  Layer l;
  l.name = "touchbar";
  std::vector<double> targets;
  for (int i = 1; i <= cfg.num_keys; ++i) {
    const KeyId& key = row[static_cast<std::size_t>(i - 1)];
    const double target = cfg.media_length_s * i / cfg.num_keys;
    targets.push_back(target);
    l.bindings[key] = SeekTo{target};
    l.legends[key] = format_seconds(target);
    if (cfg.variant == TouchBarVariant::Highlight) l.highlights[key] = "yellow";
    p.chord_order.push_back(key);
  }
  for (std::size_t i = 0; i + 1 < targets.size(); ++i) {
    p.chord_rules.push_back(
        ChordRule{row[i], row[i + 1], SeekTo{(targets[i] + targets[i + 1]) / 2.0}, cfg.chord_window_ms});
  }
  p.layers.push_back(std::move(l));
  switch (cfg.variant) {
    case TouchBarVariant::Highlight: p.render_hint = RenderHint::FullKeyboard; break;
    case TouchBarVariant::OneRow: p.render_hint = RenderHint::OneRowWithBounds; break;
    case TouchBarVariant::Invisible: p.render_hint = RenderHint::GeometryOnly; break;
  }
  return p;
}

std::string to_string(PagedKind kind) {
  switch (kind) {
    case PagedKind::Emoji: return "emoji";
    case PagedKind::Photo: return "photo";
    case PagedKind::Window: return "window";
    case PagedKind::Bookmark: return "bookmark";
  }
  return "emoji";
}

std::vector<std::vector<KeyId>> allocate_footprints(const KeyboardLayout& layout, const KeySet& keys,
                                                    std::size_t items) {
  if (items == 0) return {};
  require(items <= keys.size(), std::to_string(items) + " items do not fit on " +
                                    std::to_string(keys.size()) + " keys");
  std::map<int, std::vector<KeyId>> by_row;
  for (const KeyId& k : keys) by_row[layout.at(k).row].push_back(k);
  std::vector<std::vector<KeyId>> rows;
  for (auto& [r, ks] : by_row) rows.push_back(std::move(ks));
  const std::size_t row_count = rows.size();

  struct Plan {
    std::vector<std::vector<KeyId>> bands;
    std::vector<std::size_t> counts;
    std::size_t min_footprint = 0;
    double aspect_error = 0.0;
  };
  std::optional<Plan> best;
  for (std::size_t b = 1; b <= row_count; ++b) {
    Plan plan;
    for (std::size_t j = 0; j < b; ++j) {
      std::vector<KeyId> band;
      for (std::size_t r = j * row_count / b; r < (j + 1) * row_count / b; ++r) {
        band.insert(band.end(), rows[r].begin(), rows[r].end());
      }
      std::stable_sort(band.begin(), band.end(), [&](const KeyId& a, const KeyId& c) {
        const Key& ka = layout.at(a);
        const Key& kc = layout.at(c);
        const double xa = ka.rect.center().x;
        const double xc = kc.rect.center().x;
        return xa != xc ? xa < xc : ka.row < kc.row;
      });
      plan.bands.push_back(std::move(band));
    }
    // Largest footprint f with enough blocks, then give back the surplus
    // from the bands whose blocks are smallest.
    std::size_t f = keys.size() / items;
    auto capacity = [&](std::size_t fp) {
      std::size_t total = 0;
      for (const auto& band : plan.bands) total += band.size() / fp;
      return total;
    };
    while (f > 1 && capacity(f) < items) --f;
    for (const auto& band : plan.bands) plan.counts.push_back(band.size() / f);
    std::size_t surplus = capacity(f) - items;
    while (surplus > 0) {
      std::size_t pick = plan.bands.size();
      for (std::size_t j = 0; j < plan.bands.size(); ++j) {
        if (plan.counts[j] == 0) continue;
        if (pick == plan.bands.size() ||
            plan.bands[j].size() * plan.counts[pick] <= plan.bands[pick].size() * plan.counts[j]) {
          pick = j;
        }
      }
      --plan.counts[pick];
      --surplus;
    }
    plan.min_footprint = keys.size();
    double aspect_sum = 0.0;
    std::size_t used = 0;
    for (std::size_t j = 0; j < plan.bands.size(); ++j) {
      if (plan.counts[j] == 0) continue;
      const std::size_t fp = plan.bands[j].size() / plan.counts[j];
      plan.min_footprint = std::min(plan.min_footprint, fp);
      const double height = static_cast<double>((j + 1) * row_count / b - j * row_count / b);
      const double width = static_cast<double>(plan.bands[j].size()) / plan.counts[j] / height;
      aspect_sum += std::abs(std::log(width / height / 1.5));
      ++used;
    }
    plan.aspect_error = aspect_sum / static_cast<double>(used);
    if (!best || plan.min_footprint > best->min_footprint ||
        (plan.min_footprint == best->min_footprint && plan.aspect_error < best->aspect_error)) {
      best = std::move(plan);
    }
  }

  std::vector<std::vector<KeyId>> blocks;
  for (std::size_t j = 0; j < best->bands.size(); ++j) {
    const auto& band = best->bands[j];
    const std::size_t a = best->counts[j];
    for (std::size_t i = 0; i < a; ++i) {
      blocks.emplace_back(band.begin() + static_cast<std::ptrdiff_t>(i * band.size() / a),
                          band.begin() + static_cast<std::ptrdiff_t>((i + 1) * band.size() / a));
    }
  }
  return blocks;
}

PageInfo paged_info(PagedKind kind, const PagedSetCfg& cfg, const KeyboardLayout& layout) {
  require(!cfg.items.empty(), "paged set needs items");
  const KeySet keys = item_keys(kind, cfg, layout);
  require(!keys.empty(), "paged set needs keys");
  PageInfo info;
  info.page_size = keys.size();
  info.page_count = (cfg.items.size() + info.page_size - 1) / info.page_size;
  return info;
}

MappingProfile build_paged_profile(PagedKind kind, const PagedSetCfg& cfg,
                                   std::shared_ptr<const KeyboardLayout> layout) {
  require(layout != nullptr, "paged profile needs a layout");
  const PageInfo info = paged_info(kind, cfg, *layout);
  require(cfg.current_page < info.page_count, "current page out of range");
  require(cfg.overlays.empty() || cfg.overlays.size() == cfg.items.size(),
          "overlays must match items one to one");
  const std::vector<KeyId> keys = layout->ordered(item_keys(kind, cfg, *layout));
  const std::string label = page_label(kind);

  MappingProfile p;
  p.name = label;
  p.layout = layout;
  LayerCycle cycle;
  cycle.name = label;
  cycle.next = kPageDown;
  cycle.prev = kPageUp;
  auto overlay_of = [&](std::size_t i) { return cfg.overlays.empty() ? cfg.items[i] : cfg.overlays[i]; };

  if (per_key_kind(kind)) {
    p.layers.push_back(text_layer(*layout, "text"));
    for (std::size_t page = 0; page < info.page_count; ++page) {
      Layer l;
      l.name = label + "-" + std::to_string(page + 1);
      for (std::size_t slot = 0; slot < keys.size(); ++slot) {
        const std::size_t i = page * info.page_size + slot;
        if (i >= cfg.items.size()) break;
        if (kind == PagedKind::Emoji) {
          l.bindings[keys[slot]] = EmitText{cfg.items[i]};
          l.legends[keys[slot]] = cfg.items[i];
        } else {
          l.bindings[keys[slot]] = Command{"open-bookmark", {cfg.items[i], overlay_of(i)}};
          l.legends[keys[slot]] = cfg.items[i];
        }
      }
      cycle.layers.push_back(l.name);
      p.layers.push_back(std::move(l));
    }
    cycle.modifier = kCtrl;
    p.modifier_rules[kCtrl] = label;
    p.cycles.push_back(std::move(cycle));
    return p;
  }

  KeySet key_set(keys.begin(), keys.end());
  for (std::size_t page = 0; page < info.page_count; ++page) {
    Layer l;
    l.name = info.page_count == 1 ? label : label + "-" + std::to_string(page + 1);
    const std::size_t first = page * info.page_size;
    const std::size_t count = std::min(info.page_size, cfg.items.size() - first);
    const auto blocks = allocate_footprints(*layout, key_set, count);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const std::size_t i = first + b;
      const SelectItem action{cfg.items[i]};
      if (blocks[b].size() == 1) {
        l.bindings[blocks[b][0]] = action;
        l.legends[blocks[b][0]] = overlay_of(i);
      } else {
        p.shared_groups.push_back(
            SharedActionGroup{KeySet(blocks[b].begin(), blocks[b].end()), action, overlay_of(i), l.name});
      }
    }
    cycle.layers.push_back(l.name);
    p.layers.push_back(std::move(l));
  }
  if (info.page_count > 1) {
    cycle.sets_base = true;
    p.cycles.push_back(std::move(cycle));
  }
  p.active_layer = cfg.current_page;
  return p;
}

std::string to_string(Language lang) {
  switch (lang) {
    case Language::Latin: return "latin";
    case Language::Arabic: return "arabic";
    case Language::Cyrillic: return "cyrillic";
    case Language::Greek: return "greek";
    case Language::Hindi: return "hindi";
    case Language::Japanese: return "japanese";
  }
  return "latin";
}

Language language_from_string(const std::string& s) {
  for (Language l : {Language::Latin, Language::Arabic, Language::Cyrillic, Language::Greek, Language::Hindi,
                     Language::Japanese}) {
    if (to_string(l) == s) return l;
  }
  throw ParameterError("unknown language '" + s + "'");
}

MappingProfile build_language_profile(Language lang, std::shared_ptr<const KeyboardLayout> layout) {
  require(layout != nullptr, "language profile needs a layout");
  MappingProfile p;
  p.name = "languages";
  p.layout = layout;
  LayerCycle cycle{"languages", {}, kPageDown, kPageUp, kCtrl, true, true};
  for (Language l : {Language::Latin, Language::Arabic, Language::Cyrillic, Language::Greek, Language::Hindi,
                     Language::Japanese}) {
    Layer layer = text_layer(*layout, to_string(l));
    if (l != Language::Latin) {
      const auto doc = load_asset_json(std::filesystem::path("languages") / (to_string(l) + ".json"));
      for (const auto& [code, text] : doc.at("keys").items()) {
        const KeyId key(code);
        if (!layout->contains(key)) continue;
        layer.bindings[key] = EmitText{text.get<std::string>()};
        layer.legends[key] = text.get<std::string>();
      }
    }
    if (l == lang) p.active_layer = p.layers.size();
    cycle.layers.push_back(layer.name);
    p.layers.push_back(std::move(layer));
  }
  p.cycles.push_back(std::move(cycle));

  const auto variants = load_asset_json("variants.json");
  const KeyId trigger(variants.value("trigger", "AltLeft"));
  KeySet hosts = letter_keys(*layout);
  hosts.merge(digit_keys(*layout));
  for (const auto& [code, options] : variants.at("variants").items()) {
    const KeyId base(code);
    if (!layout->contains(base)) continue;
    std::vector<KeyId> slots;
    for (const KeyId& n : layout->neighbors(base)) {
      if (hosts.contains(n)) slots.push_back(n);
    }
    std::sort(slots.begin(), slots.end(), [&](const KeyId& a, const KeyId& b) {
      const Key& ka = layout->at(a);
      const Key& kb = layout->at(b);
      return std::pair(ka.row, ka.col) < std::pair(kb.row, kb.col);
    });
    const auto texts = json_strings(options);
    require(slots.size() >= texts.size(), "not enough neighbours of " + code + " for its variants");
    VariantRule rule{trigger, base, {}};
    for (std::size_t i = 0; i < texts.size(); ++i) rule.options.emplace_back(slots[i], texts[i]);
    p.variant_rules.push_back(std::move(rule));
  }
  return p;
}

MappingProfile build_browser_profile(std::shared_ptr<const KeyboardLayout> layout) {
  require(layout != nullptr, "browser profile needs a layout");
  const auto doc = load_asset_json("bookmarks.json");
  PagedSetCfg cfg;
  for (const auto& b : doc.at("bookmarks")) {
    cfg.items.push_back(b.at("id").get<std::string>());
    cfg.overlays.push_back(b.at("url").get<std::string>());
  }
  MappingProfile p = build_paged_profile(PagedKind::Bookmark, cfg, layout);
  p.name = "browser_shortcuts";
  const std::vector<std::tuple<const char*, const char*, const char*>> shortcuts = {
      {"ArrowLeft", "navigate-back", "←"},  {"ArrowRight", "navigate-forward", "→"},
      {"Home", "navigate-home", "⌂"},       {"F5", "reload", "⟳"},
      {"Escape", "stop-loading", "✕"},
  };
  for (Layer& l : p.layers) {
    if (l.name == "text") continue;
    for (const auto& [code, command, glyph] : shortcuts) {
      const KeyId key(code);
      if (!layout->contains(key)) continue;
      l.bindings[key] = Command{command, {}};
      l.legends[key] = glyph;
    }
  }
  return p;
}

MappingProfile build_word_macro_profile(std::shared_ptr<const KeyboardLayout> layout) {
  require(layout != nullptr, "macro profile needs a layout");
  MappingProfile p;
  p.name = "word_macros";
  p.layout = layout;
  p.layers.push_back(text_layer(*layout, "text"));
  Layer macros;
  macros.name = "macros";
  const std::vector<std::tuple<const char*, const char*, const char*>> table = {
      {"KeyS", "insert-signature", "Sig"},
      {"KeyA", "insert-sender-address", "Addr"},
      {"KeyI", "insert-image", "Img"},
  };
  for (const auto& [code, command, glyph] : table) {
    macros.bindings[KeyId(code)] = Command{command, {}};
    macros.legends[KeyId(code)] = glyph;
    macros.highlights[KeyId(code)] = "blue";
  }
  p.layers.push_back(std::move(macros));
  p.modifier_rules[kAlt] = "macros";
  return p;
}

MappingProfile build_password_profile(std::shared_ptr<const KeyboardLayout> layout) {
  require(layout != nullptr, "password profile needs a layout");
  MappingProfile p;
  p.name = "secure_password";
  p.layout = layout;
  Layer l;
  l.name = "password";
  for (const KeyId& k : default_shuffle_group(*layout)) {
    l.bindings[k] = EmitText{layout->at(k).default_legend};
    l.legends[k] = layout->at(k).default_legend;
  }
  if (layout->contains(KeyId("Enter"))) l.bindings[KeyId("Enter")] = Command{"submit", {}};
  if (layout->contains(KeyId("Backspace"))) l.bindings[KeyId("Backspace")] = Command{"backspace", {}};
  p.layers.push_back(std::move(l));
  return p;
}

MappingProfile apply_shuffle(const MappingProfile& profile, const ShuffledLayout& shuffled) {
  require(profile.layout && profile.layout->name() == shuffled.base().name(),
          "shuffle was drawn for a different layout");
  MappingProfile out = profile;
  require(out.active_layer < out.layers.size(), "profile has no active layer");
  Layer& l = out.layers[out.active_layer];
  for (const KeyId& physical : shuffled.group()) {
    const std::string legend = decode_press(shuffled, physical);
    l.bindings[physical] = EmitText{legend};
    l.legends[physical] = legend;
  }
  return out;
}

MoleGameCfg default_mole_config(const KeyboardLayout& layout, std::uint64_t seed) {
  MoleGameCfg cfg;
  cfg.grid = build_image_map(letter_keys(layout), layout);
  cfg.grid.overlay = "asset:mole/field.png";
  cfg.seed = seed;
  return cfg;
}

GameState initial_game_state(const MoleGameCfg& cfg) {
  require(cfg.spawn_interval_ms > 0.0 && cfg.mole_lifetime_ms > 0, "mole intervals must be positive");
  GameState s;
  s.rng = Rng(cfg.seed);
  s.next_spawn = sample_interval(s.rng, cfg.spawn_interval_ms);
  return s;
}

GameState mole_tick(const GameState& state, const MoleGameCfg& cfg, std::int64_t now,
                    const std::vector<Coordinate>& hits) {
  require(now >= state.clock, "mole_tick time went backwards");
  GameState s = state;
  s.events.clear();
  auto expire_until = [&](std::int64_t t) {
    std::vector<std::pair<std::int64_t, Cell>> due;
    for (const auto& [cell, expiry] : s.active_moles) {
      if (expiry <= t) due.emplace_back(expiry, cell);
    }
    std::sort(due.begin(), due.end());
    for (const auto& [expiry, cell] : due) {
      s.active_moles.erase(cell);
      s.spawned_at.erase(cell);
      ++s.expired;
      s.events.push_back(Command{"mole-expire", cell_args(cell)});
    }
  };
  const auto cells = grid_cells(cfg.grid);
  while (s.next_spawn <= now) {
    expire_until(s.next_spawn);
    std::vector<Cell> free;
    for (const Cell& c : cells) {
      if (!s.active_moles.contains(c)) free.push_back(c);
    }
    if (!free.empty()) {
      const Cell c = free[s.rng.below(free.size())];
      s.active_moles[c] = s.next_spawn + cfg.mole_lifetime_ms;
      s.spawned_at[c] = s.next_spawn;
      s.events.push_back(Command{"mole-spawn", cell_args(c)});
    }
    s.next_spawn += sample_interval(s.rng, cfg.spawn_interval_ms);
  }
  expire_until(now);
  for (const Coordinate& h : hits) {
    const int row = std::clamp(static_cast<int>(std::floor(h.v * cfg.grid.rows)), 0, cfg.grid.rows - 1);
    const int col = std::clamp(static_cast<int>(std::floor(h.u * cfg.grid.cols)), 0, cfg.grid.cols - 1);
    const Cell c{row, col};
    if (s.active_moles.contains(c)) {
      const std::int64_t reaction = now - s.spawned_at.at(c);
      s.active_moles.erase(c);
      s.spawned_at.erase(c);
      ++s.score;
      s.reaction_ms.push_back(reaction);
      auto args = cell_args(c);
      args.push_back(std::to_string(reaction));
      s.events.push_back(Command{"mole-hit", std::move(args)});
    } else {
      ++s.misses;
      s.events.push_back(Command{"mole-miss", cell_args(c)});
    }
  }
  s.clock = now;
  return s;
}

std::int64_t mole_next_deadline(const GameState& state) {
  std::int64_t t = state.next_spawn;
  for (const auto& [cell, expiry] : state.active_moles) t = std::min(t, expiry);
  return t;
}

MappingProfile build_whack_a_mole(const MoleGameCfg& cfg, std::shared_ptr<const KeyboardLayout> layout) {
  require(layout != nullptr, "mole game needs a layout");
  MappingProfile p;
  p.name = "whack_a_mole";
  p.layout = layout;
  p.layers.push_back(Layer{"game", {}, {}, {}});
  p.image_maps.push_back(cfg.grid);
  return p;
}

const std::vector<std::string>& bundled_profile_names() {
  static const std::vector<std::string> names = {
      "emojis",         "languages",    "browser_shortcuts", "word_macros",     "window_manager",
      "photo_browser",  "whack_a_mole", "secure_password",   "virtual_touchbar",
  };
  return names;
}

std::string bundled_profile_description(const std::string& name) {
  static const std::map<std::string, std::string> text = {
      {"emojis", "Hold Ctrl for an emoji layer; Ctrl+PageUp/PageDown changes the set"},
      {"languages", "Latin, Arabic, Cyrillic, Greek, Hindi and Japanese layers; Ctrl+PageUp/PageDown switches, "
                    "Alt+letter shows variants"},
      {"browser_shortcuts", "Hold Ctrl for navigation commands and ten bookmarks on the digit row"},
      {"word_macros", "Hold Alt for signature, sender address and image macros"},
      {"window_manager", "Each open window owns the keys under its thumbnail"},
      {"photo_browser", "Each photo owns a block of keys; PageUp/PageDown for more"},
      {"whack_a_mole", "Letter block as a game board"},
      {"secure_password", "Password entry on a shuffled layout"},
      {"virtual_touchbar", "Digit row as a seek bar; adjacent pairs pick the midpoint"},
  };
  auto it = text.find(name);
  if (it == text.end()) throw ParameterError("unknown profile '" + name + "'");
  return it->second;
}

bool is_bundled_profile(const std::string& name) {
  const auto& names = bundled_profile_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

MappingProfile build_bundled_profile(const std::string& name, std::shared_ptr<const KeyboardLayout> layout,
                                     const nlohmann::json& config) {
  const nlohmann::json cfg = config.is_object() ? config : nlohmann::json::object();
  if (name == "emojis") {
    PagedSetCfg set;
    set.items = json_strings(load_asset_json("emoji.json").at("emojis"));
    const auto count = cfg.value("count", set.items.size());
    require(count >= 1 && count <= set.items.size(), "emoji count out of range");
    set.items.resize(count);
    MappingProfile p = build_paged_profile(PagedKind::Emoji, set, layout);
    p.name = name;
    return p;
  }
  if (name == "languages") return build_language_profile(language_from_string(cfg.value("language", "latin")), layout);
  if (name == "browser_shortcuts") return build_browser_profile(layout);
  if (name == "word_macros") return build_word_macro_profile(layout);
  if (name == "window_manager" || name == "photo_browser") {
    PagedSetCfg set;
    if (name == "window_manager") {
      set.items = cfg.contains("windows")
                      ? json_strings(cfg.at("windows"))
                      : std::vector<std::string>{"mail", "browser", "editor", "terminal", "music", "calendar"};
      for (const auto& w : set.items) set.overlays.push_back("asset:windows/" + w + ".png");
    } else {
      const int photos = cfg.value("photos", 24);
      require(photos >= 1, "photo count must be positive");
      for (int i = 1; i <= photos; ++i) {
        std::string id = std::to_string(i);
        id = "photo-" + std::string(id.size() < 3 ? 3 - id.size() : 0, '0') + id;
        set.items.push_back(id);
        set.overlays.push_back("asset:photos/" + id + ".jpg");
      }
    }
    MappingProfile p =
        build_paged_profile(name == "window_manager" ? PagedKind::Window : PagedKind::Photo, set, layout);
    p.name = name;
    return p;
  }
  if (name == "whack_a_mole") return build_whack_a_mole(default_mole_config(*layout, 0), layout);
  if (name == "secure_password") return build_password_profile(layout);
  if (name == "virtual_touchbar") {
    TouchBarProfileCfg tb;
    tb.num_keys = cfg.value("num_keys", tb.num_keys);
    tb.media_length_s = cfg.value("media_length_s", tb.media_length_s);
    tb.variant = touchbar_variant_from_string(cfg.value("variant", to_string(tb.variant)));
    tb.chord_window_ms = cfg.value("chord_window_ms", tb.chord_window_ms);
    return build_touchbar(tb, layout);
  }
  throw ParameterError("unknown profile '" + name + "'");
}

}  // namespace keyreconf
