#include <algorithm>
#include <set>

#include "doctest.h"
#include "keyreconf/app_profiles.hpp"
#include "keyreconf/assets.hpp"
#include "keyreconf/errors.hpp"
#include "keyreconf/mapping.hpp"
#include "keyreconf/rng.hpp"

using namespace keyreconf;

namespace {

KeyEvent down(std::int64_t t, const char* key) { return {t, KeyId(key), Edge::Down}; }
KeyEvent up(std::int64_t t, const char* key) { return {t, KeyId(key), Edge::Up}; }

struct Driver {
  MappingProfile profile;
  EngineState state;
  std::vector<TimedAction> actions;
  std::vector<std::string> warnings;
  std::uint64_t last_version = 0;
  bool monotone = true;

  explicit Driver(MappingProfile p) : profile(std::move(p)), state(initial_state(profile)) {}

  StepResult take(StepResult r) {
    for (const auto& a : r.actions) actions.push_back(a);
    for (const auto& w : r.warnings) warnings.push_back(w);
    if (r.render) {
      if (r.render->version <= last_version) monotone = false;
      last_version = r.render->version;
    }
    return r;
  }
  StepResult feed(const KeyEvent& e) { return take(apply_event(profile, state, e)); }
  StepResult settle(std::int64_t now) { return take(resolve_chords(profile, state, now)); }
};

std::shared_ptr<const KeyboardLayout> ansi() { return bundled_layout("ansi104"); }

double seek_of(const TimedAction& a) { return std::get<SeekTo>(a.action).seconds; }

}  // namespace

TEST_CASE("emoji layer while the modifier is held") {
  Driver d(build_bundled_profile("emojis", ansi()));
  CHECK(validate_profile(d.profile).empty());
  auto r = d.feed(down(0, "ControlLeft"));
  REQUIRE(r.render);
  CHECK(r.render->per_key.at(KeyId("Digit1")).glyph == "😀");
  r = d.feed(down(10, "Digit1"));
  REQUIRE(r.actions.size() == 1);
  CHECK(r.actions[0].action == Action{EmitText{"😀"}});
  d.feed(up(20, "Digit1"));
  d.feed(up(30, "ControlLeft"));
  r = d.feed(down(40, "Digit1"));
  REQUIRE(r.actions.size() == 1);
  CHECK(r.actions[0].action == Action{EmitText{"1"}});
}

TEST_CASE("emoji pages clamp at both ends") {
  Driver d(build_bundled_profile("emojis", ansi()));
  d.feed(down(0, "ControlLeft"));
  d.feed(down(1, "PageUp"));
  d.feed(up(2, "PageUp"));
  CHECK(effective_layer(d.profile, d.state)->name == "emoji-1");
  for (int i = 0; i < 10; ++i) {
    d.feed(down(10 + 2 * i, "PageDown"));
    d.feed(up(11 + 2 * i, "PageDown"));
  }
  CHECK(effective_layer(d.profile, d.state)->name == "emoji-7");
  const auto r = d.feed(down(100, "Digit1"));
  REQUIRE(r.actions.size() == 1);
  CHECK(std::get<EmitText>(r.actions[0].action).text != "😀");
}

TEST_CASE("unbound key does nothing") {
  Driver d(build_bundled_profile("emojis", ansi()));
  d.feed(down(0, "ControlLeft"));
  const auto r = d.feed(down(5, "F7"));
  CHECK(r.actions.empty());
  CHECK_FALSE(r.render);
}

TEST_CASE("umlaut prompt") {
  Driver d(build_bundled_profile("languages", ansi()));
  d.feed(down(0, "AltLeft"));
  auto r = d.feed(down(10, "KeyA"));
  CHECK(r.actions.empty());
  REQUIRE(r.render);
  CHECK(r.render->per_key.at(KeyId("KeyQ")).glyph == "ä");
  CHECK(r.render->per_key.at(KeyId("KeyQ")).highlight == "green");
  d.feed(up(20, "KeyA"));
  d.feed(up(25, "AltLeft"));
  r = d.feed(down(30, "KeyQ"));
  REQUIRE(r.actions.size() == 1);
  CHECK(r.actions[0].action == Action{EmitText{"ä"}});
  REQUIRE(r.render);
  CHECK(r.render->per_key.at(KeyId("KeyQ")).highlight.empty());
  CHECK_FALSE(d.state.variant);
}

TEST_CASE("umlaut prompt times out") {
  Driver d(build_bundled_profile("languages", ansi()));
  d.feed(down(0, "AltLeft"));
  d.feed(down(10, "KeyA"));
  CHECK(next_deadline(d.profile, d.state) == 3010);
  CHECK_FALSE(d.settle(3009).render);
  const auto r = d.settle(3010);
  REQUIRE(r.render);
  CHECK(r.render_t_ms == 3010);
  CHECK_FALSE(d.state.variant);
}

TEST_CASE("touch bar chords") {
  auto layout = ansi();
  SUBCASE("solo press resolves at the window deadline") {
    Driver d(build_bundled_profile("virtual_touchbar", layout));
    CHECK(d.feed(down(0, "Digit1")).actions.empty());
    d.settle(100);
    REQUIRE(d.actions.size() == 1);
    CHECK(seek_of(d.actions[0]) == 10.0);
    CHECK(d.actions[0].t_ms == 50);
  }
  SUBCASE("adjacent pair merges") {
    Driver d(build_bundled_profile("virtual_touchbar", layout));
    d.feed(down(0, "Digit1"));
    d.feed(down(20, "Digit2"));
    d.settle(100);
    REQUIRE(d.actions.size() == 1);
    CHECK(seek_of(d.actions[0]) == 15.0);
  }
  SUBCASE("non-adjacent pair stays separate, in key order") {
    Driver d(build_bundled_profile("virtual_touchbar", layout));
    d.feed(down(0, "Digit3"));
    d.feed(down(10, "Digit1"));
    d.settle(100);
    REQUIRE(d.actions.size() == 2);
    CHECK(seek_of(d.actions[0]) == 10.0);
    CHECK(seek_of(d.actions[1]) == 30.0);
    CHECK(d.warnings.size() == 1);
  }
  SUBCASE("a later event settles the expired window first") {
    Driver d(build_bundled_profile("virtual_touchbar", layout));
    d.feed(down(0, "Digit1"));
    const auto r = d.feed(down(80, "Digit5"));
    REQUIRE(r.actions.size() == 1);
    CHECK(seek_of(r.actions[0]) == 10.0);
    d.settle(200);
    REQUIRE(d.actions.size() == 2);
    CHECK(seek_of(d.actions[1]) == 50.0);
    CHECK(d.actions[1].t_ms == 130);
  }
}

TEST_CASE("touch bar targets for every key and pair") {
  for (int n : {2, 5, 10}) {
    TouchBarProfileCfg cfg;
    cfg.num_keys = n;
    cfg.media_length_s = 100;
    const auto p = build_touchbar(cfg, ansi());
    REQUIRE(p.chord_order.size() == static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
      Driver d(p);
      d.feed({0, p.chord_order[static_cast<std::size_t>(i - 1)], Edge::Down});
      d.settle(1000);
      REQUIRE(d.actions.size() == 1);
      CHECK(seek_of(d.actions[0]) == doctest::Approx(100.0 * i / n));
      if (i < n) {
        Driver e(p);
        e.feed({0, p.chord_order[static_cast<std::size_t>(i - 1)], Edge::Down});
        e.feed({5, p.chord_order[static_cast<std::size_t>(i)], Edge::Down});
        e.settle(1000);
        REQUIRE(e.actions.size() == 1);
        CHECK(seek_of(e.actions[0]) == doctest::Approx(100.0 * (i + 0.5) / n));
      }
    }
  }
}

// Reference model of chord clustering for the touch bar: presses of chord
// keys gather from the first one until its window closes, and a pair of
// neighbours merges into the midpoint.
TEST_CASE("chord engine agrees with a reference model on random streams") {
  auto layout = ansi();
  const auto profile = build_bundled_profile("virtual_touchbar", layout);
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::pair<std::int64_t, int>> presses;  // (t, key index)
    std::int64_t t = 0;
    for (int i = 0; i < 12; ++i) {
      t += static_cast<std::int64_t>(rng.below(2) ? rng.below(30) : 40 + rng.below(120));
      presses.push_back({t, static_cast<int>(rng.below(10))});
    }
    Driver d(profile);
    std::vector<std::pair<std::int64_t, double>> expected;
    std::vector<std::pair<std::int64_t, int>> cluster;
    auto close = [&](std::int64_t stamp) {
      if (cluster.size() == 2 && std::abs(cluster[0].second - cluster[1].second) == 1) {
        expected.push_back({stamp, 10.0 * (cluster[0].second + cluster[1].second + 2) / 2.0});
      } else {
        std::vector<int> keys;
        for (auto& c : cluster) keys.push_back(c.second);
        std::stable_sort(keys.begin(), keys.end());
        for (int k : keys) expected.push_back({stamp, 10.0 * (k + 1)});
      }
      cluster.clear();
    };
    std::set<int> held;
    std::int64_t clock = 0;
    for (auto [pt, k] : presses) {
      const KeyId key = profile.chord_order[static_cast<std::size_t>(k)];
      // Release everything held before the next press.
      for (int h : held) d.feed({clock, profile.chord_order[static_cast<std::size_t>(h)], Edge::Up});
      held.clear();
      if (!cluster.empty() && cluster.front().first + 50 <= pt) close(cluster.front().first + 50);
      d.feed({pt, key, Edge::Down});
      cluster.push_back({pt, k});
      held.insert(k);
      clock = pt;
    }
    if (!cluster.empty()) close(cluster.front().first + 50);
    d.settle(t + 1000);
    REQUIRE(d.actions.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(d.actions[i].t_ms == expected[i].first);
      CHECK(seek_of(d.actions[i]) == doctest::Approx(expected[i].second));
    }
  }
}

TEST_CASE("a non-chord press closes the open chord window") {
  auto profile = build_bundled_profile("virtual_touchbar", ansi());
  Driver d(profile);
  d.feed(down(0, "Digit1"));
  const auto r = d.feed(down(10, "KeyQ"));
  REQUIRE(r.actions.size() == 1);
  CHECK(seek_of(r.actions[0]) == 10.0);
  CHECK(r.actions[0].t_ms == 10);
}

TEST_CASE("event errors and ignored edges") {
  Driver d(build_bundled_profile("emojis", ansi()));
  CHECK_THROWS_AS(d.feed(down(0, "NoSuchKey")), EventError);
  d.feed(down(10, "KeyA"));
  CHECK_THROWS_AS(d.feed(down(5, "KeyB")), EventError);
  auto r = d.feed(up(20, "KeyZ"));
  CHECK(r.actions.empty());
  CHECK(r.warnings.size() == 1);
  r = d.feed(down(30, "KeyA"));
  CHECK(r.actions.empty());
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("latched modifiers toggle") {
  auto profile = build_bundled_profile("emojis", ansi());
  profile.latch_modifiers = true;
  Driver d(profile);
  d.feed(down(0, "ControlLeft"));
  d.feed(up(5, "ControlLeft"));
  auto r = d.feed(down(10, "Digit1"));
  CHECK(r.actions.at(0).action == Action{EmitText{"😀"}});
  d.feed(up(15, "Digit1"));
  d.feed(down(20, "ControlLeft"));
  d.feed(up(25, "ControlLeft"));
  r = d.feed(down(30, "Digit1"));
  CHECK(r.actions.at(0).action == Action{EmitText{"1"}});
}

TEST_CASE("image maps") {
  auto layout = ansi();
  const auto full = build_image_map(KeySet([&] {
    KeySet all;
    for (const Key& k : layout->keys()) all.insert(k.id);
    return all;
  }()), *layout);
  std::set<std::pair<int, int>> cells;
  for (const auto& [k, c] : full.cell_of) cells.insert(c);
  CHECK(cells.size() == 104);

  const auto single = build_image_map({KeyId("KeyG")}, *layout);
  CHECK(single.rows == 1);
  CHECK(single.cols == 1);
  CHECK(single.coordinate_of(KeyId("KeyG")) == Coordinate{0.5, 0.5});

  const auto two = build_image_map({KeyId("KeyQ"), KeyId("KeyW"), KeyId("KeyE"), KeyId("KeyA"), KeyId("KeyS"),
                                    KeyId("KeyD")},
                                   *layout);
  CHECK(two.rows == 2);
  CHECK(two.cols == 3);
  CHECK(two.cell_of.at(KeyId("KeyQ")) == std::pair{0, 0});
  CHECK(two.cell_of.at(KeyId("KeyE")) == std::pair{0, 2});
  CHECK(two.cell_of.at(KeyId("KeyA")) == std::pair{1, 0});
  CHECK(two.cell_of.at(KeyId("KeyD")) == std::pair{1, 2});
  CHECK_THROWS_AS(build_image_map({}, *layout), ParameterError);
}

TEST_CASE("validation finds constructed violations") {
  auto layout = ansi();
  MappingProfile empty;
  empty.name = "empty";
  empty.layout = layout;
  CHECK(validate_profile(empty).size() == 1);

  MappingProfile clash;
  clash.name = "clash";
  clash.layout = layout;
  Layer l;
  l.name = "base";
  l.bindings[KeyId("KeyQ")] = EmitText{"q"};
  clash.layers.push_back(l);
  clash.shared_groups.push_back({{KeyId("KeyQ"), KeyId("KeyW")}, Command{"go", {}}, "", ""});
  CHECK(validate_profile(clash).size() == 1);

  for (const auto& name : bundled_profile_names()) {
    const auto diags = validate_profile(build_bundled_profile(name, layout));
    CHECK_MESSAGE(diags.empty(), name << ": " << (diags.empty() ? "" : diags[0].message));
  }
}

TEST_CASE("profile JSON round trip") {
  auto layout = ansi();
  auto resolve = [](const std::string& n) { return bundled_layout(n); };
  for (const auto& name : bundled_profile_names()) {
    const auto doc = profile_to_json(build_bundled_profile(name, layout));
    CHECK_MESSAGE(profile_to_json(profile_from_json(doc, resolve)) == doc, name);
  }
  CHECK_THROWS_AS(profile_from_json(nlohmann::json{{"format", "other"}}, resolve), SpecError);
}

// Random layered profiles with shared groups and image maps; every
// non-chord press must produce at most one action, and render versions
// must only grow.
TEST_CASE("single ownership and render monotonicity on random profiles") {
  auto layout = ansi();
  std::vector<KeyId> keys;
  for (const Key& k : layout->keys()) keys.push_back(k.id);
  const std::vector<KeyId> modifiers{KeyId("ControlLeft"), KeyId("AltLeft"), KeyId("ShiftLeft")};
  Rng rng(5150);
  for (int trial = 0; trial < 100; ++trial) {
    MappingProfile p;
    p.name = "random";
    p.layout = layout;
    const int layer_count = 1 + static_cast<int>(rng.below(3));
    for (int li = 0; li < layer_count; ++li) {
      Layer l;
      l.name = "L" + std::to_string(li);
      for (int b = 0; b < 30; ++b) {
        const KeyId& k = keys[rng.below(keys.size())];
        if (std::find(modifiers.begin(), modifiers.end(), k) != modifiers.end()) continue;
        l.bindings[k] = EmitText{"x" + std::to_string(b)};
      }
      p.layers.push_back(std::move(l));
      if (li > 0) p.modifier_rules[modifiers[static_cast<std::size_t>(li - 1)]] = "L" + std::to_string(li);
    }
    KeySet group{KeyId("KeyZ"), KeyId("KeyX"), KeyId("KeyC")};
    p.shared_groups.push_back({group, Command{"shared", {}}, "", ""});
    p.image_maps.push_back(build_image_map({KeyId("KeyU"), KeyId("KeyI"), KeyId("KeyJ"), KeyId("KeyK")}, *layout));
    Driver d(p);
    std::int64_t t = 0;
    KeySet held;
    for (int e = 0; e < 200; ++e) {
      t += static_cast<std::int64_t>(rng.below(40));
      const KeyId& k = rng.below(4) == 0 ? modifiers[rng.below(modifiers.size())] : keys[rng.below(keys.size())];
      const bool press = !held.contains(k);
      if (press) {
        held.insert(k);
      } else {
        held.erase(k);
      }
      const auto r = d.feed({t, k, press ? Edge::Down : Edge::Up});
      CHECK(r.actions.size() <= 1);
      for (const auto& a : r.actions) {
        if (group.contains(k)) CHECK(a.action == Action{Command{"shared", {}}});
      }
    }
    CHECK(d.monotone);
  }
}

TEST_CASE("render hints") {
  auto layout = ansi();
  for (auto [variant, visible_count] : {std::pair{TouchBarVariant::Highlight, 104}, {TouchBarVariant::Invisible, 0}}) {
    TouchBarProfileCfg cfg;
    cfg.variant = variant;
    Driver d(build_touchbar(cfg, layout));
    const auto r = render(d.profile, d.state);
    int visible = 0;
    for (const auto& [k, v] : r.per_key) visible += v.visible ? 1 : 0;
    CHECK(visible == visible_count);
  }
  TouchBarProfileCfg cfg;
  cfg.variant = TouchBarVariant::OneRow;
  Driver d(build_touchbar(cfg, layout));
  const auto r = render(d.profile, d.state);
  for (const auto& [k, v] : r.per_key) CHECK(v.visible == (layout->at(k).row == layout->at(KeyId("Digit1")).row));
  CHECK(std::any_of(r.overlays.begin(), r.overlays.end(),
                    [](const Overlay& o) { return o.kind == "bounds" && o.descriptor == "red"; }));
  const auto again = render(d.profile, d.state);
  CHECK(again.version == r.version + 1);
  CHECK(again.per_key == r.per_key);
}
