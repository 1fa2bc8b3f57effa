#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace keyreconf {

// Physical key position, named after the browser `KeyboardEvent.code`
// values (KeyA, Digit1, ShiftLeft, ...). Never a legend.
class KeyId {
 public:
  KeyId() = default;
  explicit KeyId(std::string code) : code_(std::move(code)) {}

  const std::string& code() const { return code_; }
  bool empty() const { return code_.empty(); }

  friend auto operator<=>(const KeyId&, const KeyId&) = default;

 private:
  std::string code_;
};

using KeySet = std::set<KeyId>;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Millimetres on the keyboard plane, y grows towards the user.
// Half-open: contains [x, x + width) x [y, y + height).
struct Rect {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;

  bool contains(Point p) const {
    return p.x >= x && p.x < x + width && p.y >= y && p.y < y + height;
  }
  // Overlaps thinner than kTouchEps count as touching, so keys packed with
  // no gap at fractional widths do not collide on rounding.
  static constexpr double kTouchEps = 1e-9;
  bool intersects(const Rect& o) const {
    return x + kTouchEps < o.x + o.width && o.x + kTouchEps < x + width && y + kTouchEps < o.y + o.height &&
           o.y + kTouchEps < y + height;
  }
  Point center() const { return {x + width / 2.0, y + height / 2.0}; }
  double area() const { return width * height; }

  // Smallest rect enclosing both.
  Rect united(const Rect& o) const;
};

struct Key {
  KeyId id;
  int row = 0;
  int col = 0;
  Rect rect;
  std::string default_legend;
};

// Parsed form of a `.layout` text document.
struct LayoutSpec {
  struct Entry {
    std::optional<KeyId> id;  // nullopt for blank space
    double width = 1.0;       // in pitches
    double height = 1.0;
    std::optional<std::string> legend;
  };
  struct Row {
    double offset = 0.0;  // extra vertical space before the row, in pitches
    std::vector<Entry> entries;
  };

  std::string name = "unnamed";
  double pitch_mm = 19.05;
  double gap_mm = 1.0;
  std::vector<Row> rows;
};

LayoutSpec parse_layout_spec(std::string_view text);

// Immutable once built; safe to share between threads.
class KeyboardLayout {
 public:
  static constexpr int kFormatVersion = 1;
  // Keys whose centres are within this many pitches are adjacent.
  static constexpr double kAdjacencyPitches = 1.5;

  const std::string& name() const { return name_; }
  double pitch_mm() const { return pitch_mm_; }
  std::span<const Key> keys() const { return keys_; }
  std::size_t size() const { return keys_.size(); }

  bool contains(const KeyId& id) const { return index_.contains(id); }
  const Key* find(const KeyId& id) const;
  // Throws ParameterError for unknown ids.
  const Key& at(const KeyId& id) const;
  // Position of the key in row-major spec order.
  std::size_t index_of(const KeyId& id) const;

  const KeySet& neighbors(const KeyId& id) const;
  const std::map<KeyId, KeySet>& adjacency() const { return adjacency_; }
  bool adjacent(const KeyId& a, const KeyId& b) const;

  std::optional<KeyId> key_at(Point p) const;
  Rect bounds() const;
  int row_count() const;
  std::vector<KeyId> row_keys(int row) const;

  // Sorts ids into row-major spec order.
  std::vector<KeyId> ordered(const KeySet& ids) const;

  nlohmann::json to_json() const;
  static KeyboardLayout from_json(const nlohmann::json& doc);

 private:
  friend KeyboardLayout build_layout(const LayoutSpec& spec);
  KeyboardLayout(std::string name, double pitch_mm, std::vector<Key> keys,
                 std::map<KeyId, KeySet> adjacency);

  std::string name_;
  double pitch_mm_ = 19.05;
  std::vector<Key> keys_;
  std::map<KeyId, std::size_t> index_;
  std::map<KeyId, KeySet> adjacency_;
};

// Packs each row left to right and derives adjacency from centre distance.
// Throws SpecError on duplicate ids or overlapping keys.
KeyboardLayout build_layout(const LayoutSpec& spec);
KeyboardLayout load_layout(const std::filesystem::path& path);

std::string default_legend_for(const KeyId& id);

struct Region {
  KeySet members;
  KeyId anchor;
};

// Splits `group` into connected regions of size [k, 2k-1] by greedy growth
// from the top-left-most unassigned key; undersized leftovers are merged
// into the nearest adjacent region.
std::vector<Region> partition_regions(const KeyboardLayout& layout, const KeySet& group,
                                      int region_size);

// Standard groups.
KeySet letter_keys(const KeyboardLayout& layout);
KeySet digit_keys(const KeyboardLayout& layout);

}  // namespace keyreconf

template <>
struct std::hash<keyreconf::KeyId> {
  std::size_t operator()(const keyreconf::KeyId& id) const noexcept {
    return std::hash<std::string>{}(id.code());
  }
};
