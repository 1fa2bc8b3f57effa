#include <algorithm>
#include <set>

#include "doctest.h"
#include "keyreconf/app_profiles.hpp"
#include "keyreconf/assets.hpp"
#include "keyreconf/errors.hpp"
#include "keyreconf/mapping.hpp"

using namespace keyreconf;

namespace {

std::shared_ptr<const KeyboardLayout> ansi() { return bundled_layout("ansi104"); }

std::vector<std::string> numbered(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::vector<TimedAction> press(const MappingProfile& p, EngineState& s, std::int64_t t, const char* key) {
  auto r = apply_event(p, s, {t, KeyId(key), Edge::Down});
  auto u = apply_event(p, s, {t + 1, KeyId(key), Edge::Up});
  r.append(std::move(u));
  return r.actions;
}

Coordinate cell_coordinate(const ImageMap& grid, Cell cell) {
  return {(cell.second + 0.5) / grid.cols, (cell.first + 0.5) / grid.rows};
}

}  // namespace

TEST_CASE("touch bar targets form an arithmetic sequence") {
  TouchBarProfileCfg cfg;
  const auto p = build_touchbar(cfg, ansi());
  const Layer& l = p.layers.at(0);
  std::vector<double> solo;
  for (const KeyId& k : p.chord_order) solo.push_back(std::get<SeekTo>(l.bindings.at(k)).seconds);
  REQUIRE(solo.size() == 10);
  for (std::size_t i = 0; i < solo.size(); ++i) CHECK(solo[i] == 10.0 * static_cast<double>(i + 1));
  CHECK(solo.back() == 100.0);
  REQUIRE(p.chord_rules.size() == 9);
  for (std::size_t i = 0; i < p.chord_rules.size(); ++i) {
    CHECK(std::get<SeekTo>(p.chord_rules[i].combined).seconds == (solo[i] + solo[i + 1]) / 2.0);
  }
  CHECK(p.chord_order.front() == KeyId("Digit1"));
  CHECK(p.chord_order.back() == KeyId("Digit0"));
  cfg.num_keys = 1;
  CHECK_THROWS_AS(build_touchbar(cfg, ansi()), ParameterError);
  cfg.num_keys = 14;
  CHECK_THROWS_AS(build_touchbar(cfg, ansi()), ParameterError);
  CHECK(touchbar_variant_from_string("VTOneRow") == TouchBarVariant::OneRow);
  CHECK(touchbar_variant_from_string("invisible") == TouchBarVariant::Invisible);
}

TEST_CASE("emoji paging covers every item once") {
  const auto emoji_doc = load_asset_json("emoji.json");
  PagedSetCfg cfg;
  for (const auto& e : emoji_doc.at("emojis")) cfg.items.push_back(e.get<std::string>());
  REQUIRE(cfg.items.size() == 250);
  const auto info = paged_info(PagedKind::Emoji, cfg, *ansi());
  CHECK(info.page_size == 40);
  CHECK(info.page_count == (250 + 39) / 40);
  const auto p = build_paged_profile(PagedKind::Emoji, cfg, ansi());
  CHECK(validate_profile(p).empty());
  const LayerCycle* cycle = p.cycle_named("emoji");
  REQUIRE(cycle);
  CHECK(cycle->layers.size() == 7);
  CHECK_FALSE(cycle->wrap);
  std::multiset<std::string> seen;
  for (const auto& name : cycle->layers) {
    std::set<std::string> page;
    for (const auto& [k, a] : p.layer_named(name)->bindings) {
      const auto& text = std::get<EmitText>(a).text;
      CHECK(page.insert(text).second);
      seen.insert(text);
    }
  }
  CHECK(seen == std::multiset<std::string>(cfg.items.begin(), cfg.items.end()));
}

TEST_CASE("photo browser footprints") {
  auto layout = ansi();
  SUBCASE("24 photos get multi-key blocks") {
    PagedSetCfg cfg;
    cfg.items = numbered("photo-", 24);
    const auto p = build_paged_profile(PagedKind::Photo, cfg, layout);
    CHECK(validate_profile(p).empty());
    CHECK(p.shared_groups.size() == 24);
    std::set<std::string> items;
    for (const auto& g : p.shared_groups) {
      CHECK(g.members.size() >= kMinFootprint);
      items.insert(std::get<SelectItem>(g.action).item);
    }
    CHECK(items.size() == 24);
    EngineState s = initial_state(p);
    const auto acts = press(p, s, 0, "KeyG");
    REQUIRE(acts.size() == 1);
    CHECK(std::holds_alternative<SelectItem>(acts[0].action));
  }
  SUBCASE("104 photos degenerate to one key each") {
    PagedSetCfg cfg;
    cfg.items = numbered("photo-", 104);
    const auto p = build_paged_profile(PagedKind::Photo, cfg, layout);
    CHECK(validate_profile(p).empty());
    CHECK(p.shared_groups.empty());
    std::set<std::string> items;
    for (const auto& [k, a] : p.layers.at(p.active_layer).bindings) items.insert(std::get<SelectItem>(a).item);
    CHECK(items.size() == 104);
  }
  SUBCASE("more photos than keys page with clamping") {
    PagedSetCfg cfg;
    cfg.items = numbered("photo-", 300);
    const auto p = build_paged_profile(PagedKind::Photo, cfg, layout);
    CHECK(validate_profile(p).empty());
    const auto info = paged_info(PagedKind::Photo, cfg, *layout);
    CHECK(info.page_count * info.page_size >= 300);
    EngineState s = initial_state(p);
    for (int i = 0; i < 20; ++i) press(p, s, 10 * i, "PageDown");
    CHECK(s.base_layer == p.layers.size() - 1);
  }
}

TEST_CASE("footprint allocator") {
  auto layout = ansi();
  KeySet all;
  for (const Key& k : layout->keys()) all.insert(k.id);
  for (std::size_t items : {1u, 6u, 24u, 26u, 52u, 104u}) {
    const auto blocks = allocate_footprints(*layout, all, items);
    REQUIRE(blocks.size() == items);
    KeySet used;
    std::size_t smallest = all.size();
    for (const auto& b : blocks) {
      smallest = std::min(smallest, b.size());
      for (const KeyId& k : b) CHECK(used.insert(k).second);
    }
    if (items * kMinFootprint <= all.size()) CHECK(smallest >= kMinFootprint);
  }
  CHECK_THROWS_AS(allocate_footprints(*layout, all, 105), ParameterError);
}

TEST_CASE("window manager and bookmarks") {
  auto layout = ansi();
  const auto wm = build_bundled_profile("window_manager", layout);
  CHECK(validate_profile(wm).empty());
  CHECK(wm.shared_groups.size() == 6);

  const auto browser = build_bundled_profile("browser_shortcuts", layout);
  EngineState s = initial_state(browser);
  apply_event(browser, s, {0, KeyId("ControlLeft"), Edge::Down});
  auto acts = press(browser, s, 5, "Digit1");
  REQUIRE(acts.size() == 1);
  CHECK(std::get<Command>(acts[0].action).name == "open-bookmark");
  acts = press(browser, s, 30, "ArrowLeft");
  REQUIRE(acts.size() == 1);
  CHECK(std::get<Command>(acts[0].action).name == "navigate-back");
  apply_event(browser, s, {40, KeyId("ControlLeft"), Edge::Up});
  CHECK(press(browser, s, 50, "ArrowLeft").empty());
}

TEST_CASE("word macros") {
  const auto p = build_bundled_profile("word_macros", ansi());
  EngineState s = initial_state(p);
  apply_event(p, s, {0, KeyId("AltLeft"), Edge::Down});
  const auto acts = press(p, s, 5, "KeyS");
  REQUIRE(acts.size() == 1);
  CHECK(acts[0].action == Action{Command{"insert-signature", {}}});
}

TEST_CASE("languages") {
  auto layout = ansi();
  const auto p = build_language_profile(Language::Cyrillic, layout);
  CHECK(validate_profile(p).empty());
  EngineState s = initial_state(p);
  CHECK(effective_layer(p, s)->name == "cyrillic");
  auto acts = press(p, s, 0, "KeyL");
  REQUIRE(acts.size() == 1);
  CHECK(acts[0].action == Action{EmitText{"д"}});
  CHECK(render(p, s).per_key.at(KeyId("KeyL")).glyph == "д");

  // Cycling forward from the last language wraps to the first.
  const auto jp = build_language_profile(Language::Japanese, layout);
  EngineState j = initial_state(jp);
  apply_event(jp, j, {0, KeyId("ControlLeft"), Edge::Down});
  acts = press(jp, j, 5, "PageDown");
  CHECK(effective_layer(jp, j)->name == "latin");
  press(jp, j, 10, "PageUp");
  CHECK(effective_layer(jp, j)->name == "japanese");
  CHECK(language_from_string("greek") == Language::Greek);
}

TEST_CASE("whack-a-mole is deterministic and scores hits") {
  auto layout = ansi();
  const auto cfg = default_mole_config(*layout, 31);
  CHECK(build_whack_a_mole(cfg, layout).image_maps.size() == 1);
  auto run = [&](bool play, std::vector<std::int64_t>* expected_reactions) {
    GameState g = initial_game_state(cfg);
    std::int64_t now = 0;
    for (int step = 0; step < 60; ++step) {
      now = std::max(now + 1, mole_next_deadline(g));
      g = mole_tick(g, cfg, now, {});
      if (play && !g.active_moles.empty() && step % 2 == 0) {
        const auto [cell, expiry] = *g.active_moles.begin();
        const std::int64_t hit_at = std::min(now + 100, expiry - 1);
        if (expected_reactions) expected_reactions->push_back(hit_at - g.spawned_at.at(cell));
        g = mole_tick(g, cfg, hit_at, {cell_coordinate(cfg.grid, cell)});
        now = hit_at;
      }
    }
    return g;
  };
  std::vector<std::int64_t> expected;
  const GameState a = run(true, &expected);
  const GameState b = run(true, nullptr);
  CHECK(a.score == b.score);
  CHECK(a.reaction_ms == b.reaction_ms);
  CHECK(a.score > 0);
  CHECK(a.reaction_ms.size() == static_cast<std::size_t>(a.score));
  CHECK(a.reaction_ms == expected);
  CHECK(run(false, nullptr).score == 0);
  CHECK(run(false, nullptr).expired > 0);

  GameState g = initial_game_state(cfg);
  g = mole_tick(g, cfg, mole_next_deadline(g), {});
  REQUIRE(g.active_moles.size() == 1);
  for (const auto& [cell, expiry] : g.active_moles) CHECK(expiry > g.clock);
  Cell empty{0, 0};
  while (g.active_moles.contains(empty)) empty.second += 1;
  const int before = g.score;
  g = mole_tick(g, cfg, g.clock, {cell_coordinate(cfg.grid, empty)});
  CHECK(g.score == before);
  CHECK(g.misses == 1);
  REQUIRE_FALSE(g.events.empty());
  CHECK(g.events.back().name == "mole-miss");
}

TEST_CASE("bundled profiles") {
  CHECK(bundled_profile_names().size() == 9);
  for (const auto& name : bundled_profile_names()) {
    CHECK(is_bundled_profile(name));
    CHECK_FALSE(bundled_profile_description(name).empty());
  }
  CHECK_THROWS_AS(build_bundled_profile("tetris", ansi()), ParameterError);
  const auto tb = build_bundled_profile("virtual_touchbar", ansi(), {{"num_keys", 5}, {"media_length_s", 60}});
  CHECK(std::get<SeekTo>(tb.layers[0].bindings.at(KeyId("Digit1"))).seconds == 12.0);
}

TEST_CASE("shipped profile documents match the builders and validate") {
  auto resolve = [](const std::string& n) { return bundled_layout(n); };
  for (const auto& name : bundled_profile_names()) {
    const auto doc = load_asset_json("profiles/" + name + ".json");
    const auto p = profile_from_json(doc, resolve);
    CHECK_MESSAGE(validate_profile(p).empty(), name);
    CHECK_MESSAGE(doc == profile_to_json(build_bundled_profile(name, bundled_layout("ansi104"))), name);
  }
}

TEST_CASE("password profile applies the shuffle") {
  auto layout = ansi();
  const auto base = build_password_profile(layout);
  const auto shuffled = shuffle(layout, default_shuffle_group(*layout), RegionShuffle{6}, Seed{7});
  const auto p = apply_shuffle(base, shuffled);
  CHECK(validate_profile(p).empty());
  EngineState s = initial_state(p);
  const auto r = render(p, s);
  for (const KeyId& k : shuffled.group()) {
    CHECK(r.per_key.at(k).glyph == decode_press(shuffled, k));
    const auto acts = press(p, s, s.clock_ms + 10, k.code().c_str());
    REQUIRE(acts.size() == 1);
    CHECK(acts[0].action == Action{EmitText{decode_press(shuffled, k)}});
  }
}
