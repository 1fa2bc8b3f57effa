#include "keyreconf/shuffle.hpp"

#include <algorithm>

#include "keyreconf/errors.hpp"
#include "keyreconf/rng.hpp"

namespace keyreconf {

std::string strategy_name(const ShuffleStrategy& s) {
  if (const auto* r = std::get_if<RegionShuffle>(&s)) return "region:" + std::to_string(r->region_size);
  if (std::holds_alternative<RowShuffle>(s)) return "row";
  return "full";
}

ShuffleStrategy parse_strategy(const std::string& text) {
  if (text == "row") return RowShuffle{};
  if (text == "full") return FullShuffle{};
  if (text == "region") return RegionShuffle{6};
  if (text.starts_with("region:")) {
    try {
      std::size_t used = 0;
      int k = std::stoi(text.substr(7), &used);
      if (used == text.size() - 7) return RegionShuffle{k};
    } catch (const std::exception&) {
    }
  }
  throw ParameterError("unknown shuffle strategy '" + text + "' (expected region[:k], row or full)");
}

nlohmann::json strategy_to_json(const ShuffleStrategy& s) {
  if (const auto* r = std::get_if<RegionShuffle>(&s)) {
    return {{"kind", "region"}, {"region_size", r->region_size}};
  }
  return {{"kind", std::holds_alternative<RowShuffle>(s) ? "row" : "full"}};
}

ShuffleStrategy strategy_from_json(const nlohmann::json& doc) {
  if (doc.is_string()) return parse_strategy(doc.get<std::string>());
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "region") return RegionShuffle{doc.value("region_size", 6)};
  return parse_strategy(kind);
}

KeySet default_shuffle_group(const KeyboardLayout& layout) {
  KeySet group = letter_keys(layout);
  group.merge(digit_keys(layout));
  return group;
}

std::vector<std::vector<KeyId>> shuffle_orbits(const KeyboardLayout& layout, const KeySet& group,
                                               const ShuffleStrategy& strategy) {
  if (group.empty()) throw ParameterError("shuffle group is empty");
  for (const KeyId& id : group) {
    if (!layout.contains(id)) throw ParameterError("group key '" + id.code() + "' not in layout");
  }
  std::vector<std::vector<KeyId>> orbits;
  if (const auto* region = std::get_if<RegionShuffle>(&strategy)) {
    if (region->region_size < 2) throw ParameterError("region shuffle needs region size >= 2");
    if (group.size() == 1) return {{*group.begin()}};
    for (const Region& r : partition_regions(layout, group, region->region_size)) {
      orbits.push_back(layout.ordered(r.members));
    }
  } else if (std::holds_alternative<RowShuffle>(strategy)) {
    std::map<int, KeySet> rows;
    for (const KeyId& id : group) rows[layout.at(id).row].insert(id);
    for (const auto& [row, members] : rows) orbits.push_back(layout.ordered(members));
  } else {
    orbits.push_back(layout.ordered(group));
  }
  return orbits;
}

ShuffledLayout::ShuffledLayout(std::shared_ptr<const KeyboardLayout> base, KeySet group,
                               std::map<KeyId, KeyId> perm, ShuffleStrategy strategy, Seed seed,
                               std::vector<std::vector<KeyId>> orbits)
    : base_(std::move(base)),
      group_(std::move(group)),
      perm_(std::move(perm)),
      strategy_(strategy),
      seed_(seed),
      orbits_(std::move(orbits)) {
  for (const auto& [pos, src] : perm_) {
    if (!inverse_.emplace(src, pos).second) {
      throw ParameterError("permutation is not injective at '" + src.code() + "'");
    }
  }
  for (std::size_t i = 0; i < orbits_.size(); ++i) {
    for (const KeyId& id : orbits_[i]) orbit_index_[id] = i;
  }
}

KeyId ShuffledLayout::source(const KeyId& physical) const {
  auto it = perm_.find(physical);
  return it == perm_.end() ? physical : it->second;
}

KeyId ShuffledLayout::position_of(const KeyId& source_key) const {
  auto it = inverse_.find(source_key);
  return it == inverse_.end() ? source_key : it->second;
}

std::size_t ShuffledLayout::orbit_size(const KeyId& physical) const {
  auto it = orbit_index_.find(physical);
  return it == orbit_index_.end() ? 1 : orbits_[it->second].size();
}

std::span<const KeyId> ShuffledLayout::orbit_of(const KeyId& physical) const {
  auto it = orbit_index_.find(physical);
  if (it == orbit_index_.end()) return {};
  return orbits_[it->second];
}

nlohmann::json ShuffledLayout::to_json() const {
  nlohmann::json pairs = nlohmann::json::array();
  for (const KeyId& pos : base_->ordered(group_)) {
    pairs.push_back({pos.code(), source(pos).code()});
  }
  nlohmann::json orbits = nlohmann::json::array();
  for (const auto& orbit : orbits_) {
    nlohmann::json o = nlohmann::json::array();
    for (const KeyId& id : orbit) o.push_back(id.code());
    orbits.push_back(std::move(o));
  }
  return {{"layout", base_->name()},
          {"seed", seed_.value},
          {"strategy", strategy_to_json(strategy_)},
          {"perm", std::move(pairs)},
          {"orbits", std::move(orbits)}};
}

ShuffledLayout shuffle(std::shared_ptr<const KeyboardLayout> layout, const KeySet& group,
                       const ShuffleStrategy& strategy, Seed seed) {
  if (!layout) throw ParameterError("shuffle needs a layout");
  auto orbits = shuffle_orbits(*layout, group, strategy);
  Rng rng(seed.value);
  std::map<KeyId, KeyId> perm;
  for (const auto& orbit : orbits) {
    std::vector<KeyId> sources = orbit;
    fisher_yates(std::span<KeyId>(sources), rng);
    for (std::size_t i = 0; i < orbit.size(); ++i) perm.emplace(orbit[i], sources[i]);
  }
  return ShuffledLayout(std::move(layout), group, std::move(perm), strategy, seed, std::move(orbits));
}

ShuffledLayout reshuffle_for_keystroke(const ShuffledLayout& session, std::uint64_t keystroke) {
  return shuffle(session.base_ptr(), session.group(), session.strategy(),
                 Seed{Rng::derive(session.seed().value, keystroke + 1)});
}

std::map<KeyId, KeyVisual> legend_render(const ShuffledLayout& shuffled) {
  std::map<KeyId, KeyVisual> out;
  for (const Key& k : shuffled.base().keys()) {
    out[k.id] = KeyVisual{shuffled.base().at(shuffled.source(k.id)).default_legend, "", true};
  }
  return out;
}

std::string decode_press(const ShuffledLayout& shuffled, const KeyId& physical) {
  if (!shuffled.base().contains(physical)) {
    throw ParameterError("unknown key '" + physical.code() + "'");
  }
  return shuffled.base().at(shuffled.source(physical)).default_legend;
}

}  // namespace keyreconf
