#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "keyreconf/layout.hpp"
#include "keyreconf/render.hpp"

namespace keyreconf {

// Keys are permuted only within their local region of `region_size` keys.
struct RegionShuffle {
  int region_size = 6;
  friend bool operator==(const RegionShuffle&, const RegionShuffle&) = default;
};
// Keys are permuted along their original row.
struct RowShuffle {
  friend bool operator==(const RowShuffle&, const RowShuffle&) = default;
};
// Keys are permuted across the whole shuffle group.
struct FullShuffle {
  friend bool operator==(const FullShuffle&, const FullShuffle&) = default;
};

using ShuffleStrategy = std::variant<RegionShuffle, RowShuffle, FullShuffle>;

// "region:6", "row", "full".
std::string strategy_name(const ShuffleStrategy& s);
ShuffleStrategy parse_strategy(const std::string& text);
nlohmann::json strategy_to_json(const ShuffleStrategy& s);
ShuffleStrategy strategy_from_json(const nlohmann::json& doc);

struct Seed {
  std::uint64_t value = 0;
};

// Letters and digits; modifiers, space, enter and backspace stay put so the
// user can always submit and correct.
KeySet default_shuffle_group(const KeyboardLayout& layout);

// The sets of keys a strategy may permute among (its orbits), in layout
// order. Every group key is in exactly one orbit.
std::vector<std::vector<KeyId>> shuffle_orbits(const KeyboardLayout& layout, const KeySet& group,
                                               const ShuffleStrategy& strategy);

class ShuffledLayout {
 public:
  ShuffledLayout(std::shared_ptr<const KeyboardLayout> base, KeySet group,
                 std::map<KeyId, KeyId> perm, ShuffleStrategy strategy, Seed seed,
                 std::vector<std::vector<KeyId>> orbits);

  const KeyboardLayout& base() const { return *base_; }
  std::shared_ptr<const KeyboardLayout> base_ptr() const { return base_; }
  const KeySet& group() const { return group_; }
  const ShuffleStrategy& strategy() const { return strategy_; }
  Seed seed() const { return seed_; }

  // Key whose default legend is shown at `physical`; identity outside the group.
  KeyId source(const KeyId& physical) const;
  // Physical position showing the legend of `source_key`.
  KeyId position_of(const KeyId& source_key) const;
  const std::map<KeyId, KeyId>& perm() const { return perm_; }
  const std::vector<std::vector<KeyId>>& orbits() const { return orbits_; }
  // Orbit size of `physical`; 1 for keys outside the group.
  std::size_t orbit_size(const KeyId& physical) const;
  // Orbit containing `physical`, in layout order; empty outside the group.
  std::span<const KeyId> orbit_of(const KeyId& physical) const;

  nlohmann::json to_json() const;

 private:
  std::shared_ptr<const KeyboardLayout> base_;
  KeySet group_;
  std::map<KeyId, KeyId> perm_;
  std::map<KeyId, KeyId> inverse_;
  ShuffleStrategy strategy_;
  Seed seed_;
  std::vector<std::vector<KeyId>> orbits_;
  std::map<KeyId, std::size_t> orbit_index_;
};

// Draws a permutation uniformly from the strategy's permutation group,
// Fisher-Yates within each orbit on one xoshiro256** stream.
ShuffledLayout shuffle(std::shared_ptr<const KeyboardLayout> layout, const KeySet& group,
                       const ShuffleStrategy& strategy, Seed seed);

// Experimental, not part of the timing model: a fresh layout per
// keystroke, derived from the session seed and the keystroke index.
ShuffledLayout reshuffle_for_keystroke(const ShuffledLayout& session, std::uint64_t keystroke);

// Per-key glyphs for the shuffled keyboard.
std::map<KeyId, KeyVisual> legend_render(const ShuffledLayout& shuffled);

// The character typed by pressing `physical`: the legend displayed there.
std::string decode_press(const ShuffledLayout& shuffled, const KeyId& physical);

}  // namespace keyreconf
