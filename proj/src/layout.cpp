#include "keyreconf/layout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "keyreconf/errors.hpp"

namespace keyreconf {
namespace {

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double parse_number(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SpecError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

// KeyId[:W[xH]][=legend], or _[:W] for blank space.
LayoutSpec::Entry parse_entry(const std::string& tok, int line_no) {
  LayoutSpec::Entry e;
  std::string body = tok;
  if (auto eq = body.find('='); eq != std::string::npos) {
    e.legend = body.substr(eq + 1);
    body = body.substr(0, eq);
  }
  std::string id = body;
  if (auto colon = body.find(':'); colon != std::string::npos) {
    id = body.substr(0, colon);
    std::string dims = body.substr(colon + 1);
    if (auto x = dims.find('x'); x != std::string::npos) {
      e.width = parse_number(dims.substr(0, x), line_no);
      e.height = parse_number(dims.substr(x + 1), line_no);
    } else {
      e.width = parse_number(dims, line_no);
    }
  }
  if (id.empty()) throw SpecError("line " + std::to_string(line_no) + ": empty key id");
  if (id != "_") e.id = KeyId(id);
  if (e.width <= 0.0 || e.height <= 0.0) {
    throw SpecError("line " + std::to_string(line_no) + ": non-positive key size in '" + tok +
                    "'");
  }
  return e;
}

const std::unordered_map<std::string, std::string>& legend_table() {
  static const std::unordered_map<std::string, std::string> table = {
      {"Backquote", "`"},     {"Minus", "-"},         {"Equal", "="},
      {"BracketLeft", "["},   {"BracketRight", "]"},  {"Backslash", "\\"},
      {"IntlBackslash", "\\"}, {"Semicolon", ";"},     {"Quote", "'"},
      {"Comma", ","},         {"Period", "."},        {"Slash", "/"},
      {"Escape", "Esc"},      {"Backspace", "Backspace"}, {"Tab", "Tab"},
      {"CapsLock", "Caps"},   {"Enter", "Enter"},     {"ShiftLeft", "Shift"},
      {"ShiftRight", "Shift"}, {"ControlLeft", "Ctrl"}, {"ControlRight", "Ctrl"},
      {"MetaLeft", "Win"},    {"MetaRight", "Win"},   {"AltLeft", "Alt"},
      {"AltRight", "AltGr"},  {"ContextMenu", "Menu"}, {"Space", "Space"},
      {"PrintScreen", "PrtSc"}, {"ScrollLock", "ScrLk"}, {"Pause", "Pause"},
      {"Insert", "Ins"},      {"Home", "Home"},       {"PageUp", "PgUp"},
      {"Delete", "Del"},      {"End", "End"},         {"PageDown", "PgDn"},
      {"ArrowUp", "Up"},      {"ArrowDown", "Down"},  {"ArrowLeft", "Left"},
      {"ArrowRight", "Right"}, {"NumLock", "Num"},     {"NumpadDivide", "/"},
      {"NumpadMultiply", "*"}, {"NumpadSubtract", "-"}, {"NumpadAdd", "+"},
      {"NumpadEnter", "Enter"}, {"NumpadDecimal", "."},
  };
  return table;
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

Rect Rect::united(const Rect& o) const {
  double x0 = std::min(x, o.x);
  double y0 = std::min(y, o.y);
  double x1 = std::max(x + width, o.x + o.width);
  double y1 = std::max(y + height, o.y + o.height);
  return {x0, y0, x1 - x0, y1 - y0};
}

std::string default_legend_for(const KeyId& id) {
  const std::string& code = id.code();
  if (code.size() == 4 && code.starts_with("Key")) {
    return std::string(1, static_cast<char>(std::tolower(static_cast<unsigned char>(code[3]))));
  }
  if (code.size() == 6 && code.starts_with("Digit")) return code.substr(5);
  if (code.size() == 7 && code.starts_with("Numpad") && std::isdigit(static_cast<unsigned char>(code[6]))) {
    return code.substr(6);
  }
  if (auto it = legend_table().find(code); it != legend_table().end()) return it->second;
  return code;
}

LayoutSpec parse_layout_spec(std::string_view text) {
  LayoutSpec spec;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      // '#' is also a legitimate legend (`Backslash=#`), so only strip
      // comments that start a token.
      if (hash == 0 || std::isspace(static_cast<unsigned char>(line[hash - 1]))) {
        line.resize(hash);
      }
    }
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    const std::string& directive = toks[0];
    if (directive == "name") {
      if (toks.size() < 2) throw SpecError("line " + std::to_string(line_no) + ": name needs a value");
      spec.name = toks[1];
    } else if (directive == "pitch") {
      if (toks.size() != 2) throw SpecError("line " + std::to_string(line_no) + ": pitch needs a value");
      spec.pitch_mm = parse_number(toks[1], line_no);
    } else if (directive == "gap") {
      if (toks.size() != 2) throw SpecError("line " + std::to_string(line_no) + ": gap needs a value");
      spec.gap_mm = parse_number(toks[1], line_no);
    } else if (directive == "row") {
      LayoutSpec::Row row;
      std::size_t i = 1;
      if (i < toks.size() && toks[i].starts_with('+')) {
        row.offset = parse_number(toks[i].substr(1), line_no);
        ++i;
      }
      for (; i < toks.size(); ++i) row.entries.push_back(parse_entry(toks[i], line_no));
      spec.rows.push_back(std::move(row));
    } else {
      throw SpecError("line " + std::to_string(line_no) + ": unknown directive '" + directive + "'");
    }
  }
  if (spec.pitch_mm <= 0.0) throw SpecError("pitch must be positive");
  if (spec.gap_mm < 0.0 || spec.gap_mm >= spec.pitch_mm) throw SpecError("gap must be in [0, pitch)");
  return spec;
}

KeyboardLayout::KeyboardLayout(std::string name, double pitch_mm, std::vector<Key> keys,
                               std::map<KeyId, KeySet> adjacency)
    : name_(std::move(name)),
      pitch_mm_(pitch_mm),
      keys_(std::move(keys)),
      adjacency_(std::move(adjacency)) {
  for (std::size_t i = 0; i < keys_.size(); ++i) index_.emplace(keys_[i].id, i);
}

const Key* KeyboardLayout::find(const KeyId& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &keys_[it->second];
}

const Key& KeyboardLayout::at(const KeyId& id) const {
  const Key* k = find(id);
  if (!k) throw ParameterError("unknown key '" + id.code() + "' in layout " + name_);
  return *k;
}

std::size_t KeyboardLayout::index_of(const KeyId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ParameterError("unknown key '" + id.code() + "' in layout " + name_);
  return it->second;
}

const KeySet& KeyboardLayout::neighbors(const KeyId& id) const {
  static const KeySet kEmpty;
  auto it = adjacency_.find(id);
  return it == adjacency_.end() ? kEmpty : it->second;
}

bool KeyboardLayout::adjacent(const KeyId& a, const KeyId& b) const {
  return neighbors(a).contains(b);
}

std::optional<KeyId> KeyboardLayout::key_at(Point p) const {
  for (const Key& k : keys_) {
    if (k.rect.contains(p)) return k.id;
  }
  return std::nullopt;
}

Rect KeyboardLayout::bounds() const {
  if (keys_.empty()) return {};
  Rect r = keys_.front().rect;
  for (const Key& k : keys_) r = r.united(k.rect);
  return r;
}

int KeyboardLayout::row_count() const {
  int rows = 0;
  for (const Key& k : keys_) rows = std::max(rows, k.row + 1);
  return rows;
}

std::vector<KeyId> KeyboardLayout::row_keys(int row) const {
  std::vector<KeyId> out;
  for (const Key& k : keys_) {
    if (k.row == row) out.push_back(k.id);
  }
  return out;
}

std::vector<KeyId> KeyboardLayout::ordered(const KeySet& ids) const {
  std::vector<KeyId> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end(),
            [this](const KeyId& a, const KeyId& b) { return index_of(a) < index_of(b); });
  return out;
}

nlohmann::json KeyboardLayout::to_json() const {
  nlohmann::json keys = nlohmann::json::array();
  for (const Key& k : keys_) {
    keys.push_back({{"id", k.id.code()},
                    {"row", k.row},
                    {"col", k.col},
                    {"rect", {k.rect.x, k.rect.y, k.rect.width, k.rect.height}},
                    {"legend", k.default_legend}});
  }
  nlohmann::json adj = nlohmann::json::object();
  for (const auto& [id, set] : adjacency_) {
    nlohmann::json members = nlohmann::json::array();
    for (const KeyId& n : set) members.push_back(n.code());
    adj[id.code()] = std::move(members);
  }
  return {{"format", "keyreconf-layout"},
          {"version", kFormatVersion},
          {"name", name_},
          {"pitch_mm", pitch_mm_},
          {"keys", std::move(keys)},
          {"adjacency", std::move(adj)}};
}

KeyboardLayout KeyboardLayout::from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "keyreconf-layout") throw SpecError("not a layout document");
  if (doc.value("version", 0) != kFormatVersion) {
    throw SpecError("unsupported layout version " + doc.value("version", nlohmann::json()).dump());
  }
  std::vector<Key> keys;
  for (const auto& jk : doc.at("keys")) {
    Key k;
    k.id = KeyId(jk.at("id").get<std::string>());
    k.row = jk.at("row").get<int>();
    k.col = jk.at("col").get<int>();
    const auto& r = jk.at("rect");
    k.rect = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
              r.at(3).get<double>()};
    k.default_legend = jk.at("legend").get<std::string>();
    keys.push_back(std::move(k));
  }
  std::map<KeyId, KeySet> adjacency;
  for (const auto& [id, members] : doc.at("adjacency").items()) {
    KeySet set;
    for (const auto& m : members) set.insert(KeyId(m.get<std::string>()));
    adjacency.emplace(KeyId(id), std::move(set));
  }
  return KeyboardLayout(doc.at("name").get<std::string>(), doc.at("pitch_mm").get<double>(),
                        std::move(keys), std::move(adjacency));
}

KeyboardLayout build_layout(const LayoutSpec& spec) {
  std::vector<Key> keys;
  std::set<KeyId> seen;
  const double pitch = spec.pitch_mm;
  const double half_gap = spec.gap_mm / 2.0;

  double row_y = 0.0;
  for (std::size_t r = 0; r < spec.rows.size(); ++r) {
    const auto& row = spec.rows[r];
    row_y += row.offset;
    double cursor = 0.0;
    int col = 0;
    for (const auto& e : row.entries) {
      if (e.id) {
        if (!seen.insert(*e.id).second) throw SpecError("duplicate key id '" + e.id->code() + "'");
        Key k;
        k.id = *e.id;
        k.row = static_cast<int>(r);
        k.col = col++;
        k.rect = {cursor * pitch + half_gap, row_y * pitch + half_gap, e.width * pitch - spec.gap_mm,
                  e.height * pitch - spec.gap_mm};
        k.default_legend = e.legend.value_or(default_legend_for(k.id));
        keys.push_back(std::move(k));
      }
      cursor += e.width;
    }
    row_y += 1.0;
  }
  if (keys.empty()) throw SpecError("layout '" + spec.name + "' has no keys");

  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::size_t j = i + 1; j < keys.size(); ++j) {
      if (keys[i].rect.intersects(keys[j].rect)) {
        throw SpecError("keys '" + keys[i].id.code() + "' and '" + keys[j].id.code() + "' overlap");
      }
    }
  }

  std::map<KeyId, KeySet> adjacency;
  const double threshold = KeyboardLayout::kAdjacencyPitches * pitch;
  for (const Key& k : keys) adjacency[k.id];
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::size_t j = i + 1; j < keys.size(); ++j) {
      if (distance(keys[i].rect.center(), keys[j].rect.center()) <= threshold) {
        adjacency[keys[i].id].insert(keys[j].id);
        adjacency[keys[j].id].insert(keys[i].id);
      }
    }
  }
  return KeyboardLayout(spec.name, pitch, std::move(keys), std::move(adjacency));
}

KeyboardLayout load_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open layout file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (path.extension() == ".json") return KeyboardLayout::from_json(nlohmann::json::parse(ss.str()));
  return build_layout(parse_layout_spec(ss.str()));
}

KeySet letter_keys(const KeyboardLayout& layout) {
  KeySet out;
  for (char c = 'A'; c <= 'Z'; ++c) {
    KeyId id("Key" + std::string(1, c));
    if (layout.contains(id)) out.insert(id);
  }
  return out;
}

KeySet digit_keys(const KeyboardLayout& layout) {
  KeySet out;
  for (char c = '0'; c <= '9'; ++c) {
    KeyId id("Digit" + std::string(1, c));
    if (layout.contains(id)) out.insert(id);
  }
  return out;
}

std::vector<Region> partition_regions(const KeyboardLayout& layout, const KeySet& group,
                                      int region_size) {
  if (region_size < 1) throw ParameterError("region size must be >= 1");
  if (static_cast<std::size_t>(region_size) > group.size()) {
    throw ParameterError("region size " + std::to_string(region_size) + " exceeds group size " +
                         std::to_string(group.size()));
  }
  for (const KeyId& id : group) {
    if (!layout.contains(id)) throw ParameterError("group key '" + id.code() + "' not in layout");
  }
  const std::size_t k = static_cast<std::size_t>(region_size);

  auto centre = [&](const KeyId& id) { return layout.at(id).rect.center(); };
  // Top-left-most first: by centre y, then x.
  std::vector<KeyId> order(group.begin(), group.end());
  std::sort(order.begin(), order.end(), [&](const KeyId& a, const KeyId& b) {
    Point pa = centre(a), pb = centre(b);
    if (pa.y != pb.y) return pa.y < pb.y;
    if (pa.x != pb.x) return pa.x < pb.x;
    return a < b;
  });
  std::map<KeyId, std::size_t> rank;
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

  struct Cluster {
    KeyId anchor;
    std::vector<KeyId> members;
  };
  std::vector<Cluster> regions;
  std::vector<Cluster> fragments;
  KeySet unassigned = group;

  for (const KeyId& seed : order) {
    if (!unassigned.contains(seed)) continue;
    Cluster c{seed, {seed}};
    unassigned.erase(seed);
    KeySet frontier;
    auto extend_frontier = [&](const KeyId& from) {
      for (const KeyId& n : layout.neighbors(from)) {
        if (unassigned.contains(n)) frontier.insert(n);
      }
    };
    extend_frontier(seed);
    const Point origin = centre(seed);
    while (c.members.size() < k && !frontier.empty()) {
      // Grow towards the frontier key closest to the seed.
      auto best = std::min_element(frontier.begin(), frontier.end(), [&](const KeyId& a, const KeyId& b) {
        double da = distance(origin, centre(a)), db = distance(origin, centre(b));
        if (da != db) return da < db;
        return rank[a] < rank[b];
      });
      KeyId next = *best;
      frontier.erase(best);
      unassigned.erase(next);
      c.members.push_back(next);
      extend_frontier(next);
    }
    (c.members.size() >= k ? regions : fragments).push_back(std::move(c));
  }

  auto touches = [&](const Cluster& a, const Cluster& b) {
    for (const KeyId& x : a.members) {
      for (const KeyId& y : b.members) {
        if (layout.adjacent(x, y)) return true;
      }
    }
    return false;
  };
  auto centroid = [&](const Cluster& c) {
    Point p;
    for (const KeyId& id : c.members) {
      Point q = centre(id);
      p.x += q.x;
      p.y += q.y;
    }
    p.x /= static_cast<double>(c.members.size());
    p.y /= static_cast<double>(c.members.size());
    return p;
  };
  auto nearest = [&](const Cluster& f, const std::vector<Cluster>& pool, auto&& admissible) {
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    Point fc = centroid(f);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (&pool[i] == &f || !admissible(pool[i]) || !touches(f, pool[i])) continue;
      double d = distance(fc, centroid(pool[i]));
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };

  while (!fragments.empty()) {
    Cluster f = std::move(fragments.front());
    fragments.erase(fragments.begin());
    auto fits = [&](const Cluster& r) { return r.members.size() + f.members.size() <= 2 * k - 1; };
    auto any = [](const Cluster&) { return true; };
    if (auto r = nearest(f, regions, fits)) {
      auto& dst = regions[*r].members;
      dst.insert(dst.end(), f.members.begin(), f.members.end());
    } else if (auto g = nearest(f, fragments, any)) {
      Cluster& other = fragments[*g];
      other.members.insert(other.members.end(), f.members.begin(), f.members.end());
      if (rank[f.anchor] < rank[other.anchor]) other.anchor = f.anchor;
      if (other.members.size() >= k) {
        regions.push_back(std::move(other));
        fragments.erase(fragments.begin() + static_cast<std::ptrdiff_t>(*g));
      }
    } else if (auto r2 = nearest(f, regions, any)) {
      // Every neighbouring region is full; accept an oversized region
      // rather than leaving keys unassigned.
      auto& dst = regions[*r2].members;
      dst.insert(dst.end(), f.members.begin(), f.members.end());
    } else {
      throw ParameterError("group has a component of " + std::to_string(f.members.size()) +
                           " keys, smaller than region size " + std::to_string(k));
    }
  }

  std::sort(regions.begin(), regions.end(),
            [&](const Cluster& a, const Cluster& b) { return rank[a.anchor] < rank[b.anchor]; });
  std::vector<Region> out;
  out.reserve(regions.size());
  for (auto& c : regions) {
    out.push_back(Region{KeySet(c.members.begin(), c.members.end()), c.anchor});
  }
  return out;
}

}  // namespace keyreconf
