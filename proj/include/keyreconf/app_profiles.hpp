#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "keyreconf/layout.hpp"
#include "keyreconf/mapping.hpp"
#include "keyreconf/rng.hpp"
#include "keyreconf/shuffle.hpp"

namespace keyreconf {

// Visual variants of the virtual touch bar.
enum class TouchBarVariant { Highlight, OneRow, Invisible };

std::string to_string(TouchBarVariant v);
TouchBarVariant touchbar_variant_from_string(const std::string& s);

struct TouchBarProfileCfg {
  int num_keys = 10;
  double media_length_s = 100.0;
  TouchBarVariant variant = TouchBarVariant::Highlight;
  int chord_window_ms = 50;
};

// Digit-row key i (1-based) seeks to media_length * i / num_keys; adjacent
// pairs seek to the midpoint of their two targets.
MappingProfile build_touchbar(const TouchBarProfileCfg& cfg, std::shared_ptr<const KeyboardLayout> layout);

enum class PagedKind { Emoji, Photo, Window, Bookmark };

std::string to_string(PagedKind kind);

struct PagedSetCfg {
  std::vector<std::string> items;
  // Overlay descriptors for photo/window items (asset paths); defaults to
  // the item id.
  std::vector<std::string> overlays;
  // Keys carrying items. Empty selects the kind's default: 40 keys of the
  // main block for emojis, the digit row for bookmarks, the whole keyboard
  // for photos and windows.
  KeySet keys;
  std::size_t current_page = 0;
};

struct PageInfo {
  std::size_t page_size = 0;
  std::size_t page_count = 0;
};

PageInfo paged_info(PagedKind kind, const PagedSetCfg& cfg, const KeyboardLayout& layout);

// Emoji and bookmark sets bind one item per key on a modifier layer
// (ControlLeft), paged with ControlLeft + PageUp/PageDown. Photos and
// windows take the whole keyboard: each item owns a block of keys, and
// PageUp/PageDown page through sets that do not fit on one page.
MappingProfile build_paged_profile(PagedKind kind, const PagedSetCfg& cfg,
                                   std::shared_ptr<const KeyboardLayout> layout);

// Splits `keys` into `items` blocks, row-major, keeping the smallest block
// as large as possible. Blocks are listed in item order.
std::vector<std::vector<KeyId>> allocate_footprints(const KeyboardLayout& layout, const KeySet& keys,
                                                    std::size_t items);

inline constexpr std::size_t kMinFootprint = 4;

enum class Language { Latin, Arabic, Cyrillic, Greek, Hindi, Japanese };

std::string to_string(Language lang);
Language language_from_string(const std::string& s);

// All languages share one base-layer cycle (ControlLeft + PageUp/PageDown,
// wrapping); `lang` is the starting layer. AltLeft + a letter with variants
// shows them on neighbouring keys.
MappingProfile build_language_profile(Language lang, std::shared_ptr<const KeyboardLayout> layout);

MappingProfile build_browser_profile(std::shared_ptr<const KeyboardLayout> layout);
MappingProfile build_word_macro_profile(std::shared_ptr<const KeyboardLayout> layout);
MappingProfile build_password_profile(std::shared_ptr<const KeyboardLayout> layout);

// Rewrites the password layer so every shuffle-group key types and shows the
// legend the permutation assigns to it.
MappingProfile apply_shuffle(const MappingProfile& profile, const ShuffledLayout& shuffled);

struct MoleGameCfg {
  ImageMap grid;
  double spawn_interval_ms = 1200.0;  // mean of the exponential inter-arrival time
  std::int64_t mole_lifetime_ms = 1500;
  std::uint64_t seed = 0;
};

using Cell = std::pair<int, int>;

struct GameState {
  std::map<Cell, std::int64_t> active_moles;  // cell -> expiry
  std::map<Cell, std::int64_t> spawned_at;
  int score = 0;
  int misses = 0;
  int expired = 0;
  std::int64_t clock = 0;
  std::int64_t next_spawn = 0;
  std::vector<std::int64_t> reaction_ms;
  // What the last tick did, in order: mole-spawn, mole-expire, mole-hit,
  // mole-miss commands.
  std::vector<Command> events;
  Rng rng{0};
};

MoleGameCfg default_mole_config(const KeyboardLayout& layout, std::uint64_t seed);
GameState initial_game_state(const MoleGameCfg& cfg);

// Advances the game to `now`: spawns and expiries up to `now` in time
// order, then the hits, which all happen at `now`.
GameState mole_tick(const GameState& state, const MoleGameCfg& cfg, std::int64_t now,
                    const std::vector<Coordinate>& hits);

// Earliest time mole_tick would change something without a hit.
std::int64_t mole_next_deadline(const GameState& state);

MappingProfile build_whack_a_mole(const MoleGameCfg& cfg, std::shared_ptr<const KeyboardLayout> layout);

// The nine bundled applications.
const std::vector<std::string>& bundled_profile_names();
std::string bundled_profile_description(const std::string& name);
bool is_bundled_profile(const std::string& name);

// Builds a bundled profile. `config` tweaks it (touch bar: num_keys,
// media_length_s, variant; photo_browser: photos; emojis: count;
// languages: language). Throws ParameterError for unknown names.
MappingProfile build_bundled_profile(const std::string& name, std::shared_ptr<const KeyboardLayout> layout,
                                     const nlohmann::json& config = nlohmann::json::object());

}  // namespace keyreconf
