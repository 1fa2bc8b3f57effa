#pragma once

#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace keyreconf {

struct Noop {
  friend bool operator==(const Noop&, const Noop&) = default;
};
struct EmitText {
  std::string text;
  friend bool operator==(const EmitText&, const EmitText&) = default;
};
// Symbolic application command (macro, shortcut, paging, game event).
struct Command {
  std::string name;
  std::vector<std::string> args;
  friend bool operator==(const Command&, const Command&) = default;
};
// Normalised position in an image map, both components in [0, 1].
struct Coordinate {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const Coordinate&, const Coordinate&) = default;
};
struct SeekTo {
  double seconds = 0.0;
  friend bool operator==(const SeekTo&, const SeekTo&) = default;
};
struct SelectItem {
  std::string item;
  friend bool operator==(const SelectItem&, const SelectItem&) = default;
};

using Action = std::variant<Noop, EmitText, Command, Coordinate, SeekTo, SelectItem>;

// Wire form: {"kind": "...", "payload": {...}}.
nlohmann::json action_to_json(const Action& action);
Action action_from_json(const nlohmann::json& doc);
std::string action_kind(const Action& action);
std::string describe(const Action& action);

inline bool is_noop(const Action& a) { return std::holds_alternative<Noop>(a); }

}  // namespace keyreconf
