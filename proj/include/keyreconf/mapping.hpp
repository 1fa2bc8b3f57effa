#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "keyreconf/action.hpp"
#include "keyreconf/layout.hpp"
#include "keyreconf/render.hpp"

namespace keyreconf {

enum class Edge { Down, Up };

std::string to_string(Edge edge);
Edge edge_from_string(const std::string& s);

struct KeyEvent {
  std::int64_t t_ms = 0;  // session-relative, supplied by the client
  KeyId key;
  Edge edge = Edge::Down;
};

nlohmann::json event_to_json(const KeyEvent& e);
KeyEvent event_from_json(const nlohmann::json& doc);

// One set of key -> action bindings with the glyphs drawn for them.
struct Layer {
  std::string name;
  std::map<KeyId, Action> bindings;
  std::map<KeyId, std::string> legends;     // Unicode text or "asset:<path>"
  std::map<KeyId, std::string> highlights;  // colour names
};

// Several physical keys acting as one button, drawn as a single area.
struct SharedActionGroup {
  KeySet members;
  Action action;
  std::string overlay;  // image or label drawn over the members' area
  std::string layer;    // active only on this layer; empty means always
};

// Keyboard area addressing the cells of a picture or grid.
struct ImageMap {
  KeySet group;
  int rows = 0;
  int cols = 0;
  std::map<KeyId, std::pair<int, int>> cell_of;
  std::string overlay;
  std::string layer;

  // Centre of the key's cell, normalised to [0, 1]^2 (u across, v down).
  Coordinate coordinate_of(const KeyId& key) const;
};

// Two neighbouring keys pressed within `window_ms` of each other.
struct ChordRule {
  KeyId first;
  KeyId second;
  Action combined;
  int window_ms = 50;
};

// Ordered set of layers stepped through with next/prev keys (pages of
// emojis or photos, languages).
struct LayerCycle {
  std::string name;
  std::vector<std::string> layers;
  KeyId next;
  KeyId prev;
  std::optional<KeyId> modifier;  // must be held for next/prev to act
  bool wrap = false;              // clamp at the ends otherwise
  bool sets_base = false;         // drives the base layer, not a modifier layer
};

// trigger held + base pressed shows `options` on neighbouring keys; the
// next press on one of them types the option.
struct VariantRule {
  KeyId trigger;
  KeyId base;
  std::vector<std::pair<KeyId, std::string>> options;
};

struct MappingProfile {
  static constexpr int kFormatVersion = 1;

  std::string name;
  std::shared_ptr<const KeyboardLayout> layout;
  std::vector<Layer> layers;
  std::size_t active_layer = 0;
  // Modifier key -> layer or cycle name, active while held.
  std::map<KeyId, std::string> modifier_rules;
  // Tap a modifier to toggle its layer instead of holding it.
  bool latch_modifiers = false;
  std::vector<SharedActionGroup> shared_groups;
  std::vector<ImageMap> image_maps;
  std::vector<KeyId> chord_order;
  std::vector<ChordRule> chord_rules;
  std::vector<LayerCycle> cycles;
  std::vector<VariantRule> variant_rules;
  int variant_timeout_ms = 3000;
  RenderHint render_hint = RenderHint::FullKeyboard;
  std::string bounds_colour = "red";

  const Layer* layer_named(const std::string& name) const;
  const LayerCycle* cycle_named(const std::string& name) const;
};

using LayoutResolver = std::function<std::shared_ptr<const KeyboardLayout>(const std::string&)>;

nlohmann::json profile_to_json(const MappingProfile& profile);
MappingProfile profile_from_json(const nlohmann::json& doc, const LayoutResolver& resolve_layout);

// Grid of (distinct rows in group) x (most keys in one row); each key gets
// its row ordinal and its left-to-right ordinal within that row.
ImageMap build_image_map(const KeySet& group, const KeyboardLayout& layout);

struct Diagnostic {
  std::string location;
  std::string message;
};

// Empty iff every type invariant holds and input ownership is disjoint.
std::vector<Diagnostic> validate_profile(const MappingProfile& profile);

struct TimedAction {
  std::int64_t t_ms = 0;
  Action action;
  std::vector<KeyId> keys;  // physical keys that produced it
};

struct EngineState {
  struct PendingPress {
    KeyId key;
    std::int64_t t_ms = 0;
  };
  struct VariantPrompt {
    KeyId base;
    std::map<KeyId, std::string> options;
    std::int64_t since_ms = 0;
  };

  std::uint64_t render_version = 0;
  std::int64_t clock_ms = 0;
  KeySet held;
  std::vector<KeyId> modifier_stack;  // held modifiers with rules, press order
  std::optional<KeyId> latched;
  std::size_t base_layer = 0;
  std::map<std::string, std::size_t> cycle_pos;
  std::optional<VariantPrompt> variant;
  std::vector<PendingPress> chord_cluster;
  // Set by application logic (e.g. moles), drawn over layer highlights.
  std::map<KeyId, std::string> app_highlights;
};

EngineState initial_state(const MappingProfile& profile);

struct StepResult {
  std::vector<TimedAction> actions;
  std::optional<RenderState> render;
  std::int64_t render_t_ms = 0;
  std::vector<std::string> warnings;

  void append(StepResult&& later);
};

// Applies one key event. Deferred chord presses whose window elapsed
// before event.t_ms are resolved first, so their actions precede the
// event's own. Throws EventError for unknown keys or time going backwards.
StepResult apply_event(const MappingProfile& profile, EngineState& state, const KeyEvent& event);

// Emits whatever became due by `now_ms`: expired chord windows and
// timed-out variant prompts. Stamps use the deadline, not `now_ms`.
StepResult resolve_chords(const MappingProfile& profile, EngineState& state, std::int64_t now_ms);

// Earliest time at which resolve_chords would emit something.
std::optional<std::int64_t> next_deadline(const MappingProfile& profile, const EngineState& state);

// Full render of the current state; bumps the version.
RenderState render(const MappingProfile& profile, EngineState& state);

// Name of the layer currently receiving key presses.
const Layer* effective_layer(const MappingProfile& profile, const EngineState& state);

}  // namespace keyreconf
