#include <cmath>
#include <queue>
#include <sstream>

#include "doctest.h"
#include "keyreconf/assets.hpp"
#include "keyreconf/errors.hpp"
#include "keyreconf/layout.hpp"
#include "keyreconf/rng.hpp"

using namespace keyreconf;

namespace {

KeyboardLayout from_text(const std::string& text) { return build_layout(parse_layout_spec(text)); }

bool connected(const KeyboardLayout& layout, const KeySet& members) {
  if (members.empty()) return false;
  KeySet seen{*members.begin()};
  std::queue<KeyId> q;
  q.push(*members.begin());
  while (!q.empty()) {
    const KeyId k = q.front();
    q.pop();
    for (const KeyId& n : layout.neighbors(k)) {
      if (members.contains(n) && seen.insert(n).second) q.push(n);
    }
  }
  return seen.size() == members.size();
}

void check_partition(const KeyboardLayout& layout, const KeySet& group, int k) {
  const auto regions = partition_regions(layout, group, k);
  KeySet seen;
  for (const Region& r : regions) {
    CHECK(r.members.contains(r.anchor));
    CHECK(r.members.size() >= static_cast<std::size_t>(k));
    CHECK(r.members.size() <= static_cast<std::size_t>(2 * k - 1));
    CHECK(connected(layout, r.members));
    for (const KeyId& m : r.members) CHECK(seen.insert(m).second);
  }
  CHECK(seen == group);
}

}  // namespace

TEST_CASE("bundled layouts have the standard key counts") {
  auto ansi = bundled_layout("ansi104");
  auto iso = bundled_layout("iso105");
  CHECK(ansi->size() == 104);
  CHECK(iso->size() == 105);
  CHECK(ansi->name() == "ANSI-104");
  CHECK(bundled_layout("ANSI-104") == ansi);
  CHECK(letter_keys(*ansi).size() == 26);
  CHECK(digit_keys(*ansi).size() == 10);
}

TEST_CASE("adjacency is symmetric and irreflexive") {
  for (const char* name : {"ansi104", "iso105"}) {
    auto layout = bundled_layout(name);
    for (const auto& [k, ns] : layout->adjacency()) {
      CHECK(layout->contains(k));
      CHECK_FALSE(ns.contains(k));
      for (const KeyId& n : ns) CHECK(layout->neighbors(n).contains(k));
    }
  }
}

TEST_CASE("degenerate and grid layouts") {
  auto single = from_text("name one\nrow A\n");
  CHECK(single.size() == 1);
  CHECK(single.neighbors(KeyId("A")).empty());

  auto grid = from_text("name grid\nrow A B C\nrow D E F\nrow G H I\n");
  CHECK(grid.neighbors(KeyId("E")).size() == 8);
  CHECK(grid.neighbors(KeyId("A")).size() == 3);
  CHECK(grid.neighbors(KeyId("B")).size() == 5);
  CHECK_FALSE(grid.adjacent(KeyId("A"), KeyId("C")));
}

TEST_CASE("spec errors") {
  CHECK_THROWS_AS(from_text("row A A\n"), SpecError);
  CHECK_THROWS_AS(from_text("bogus\n"), SpecError);
  CHECK_THROWS_AS(from_text("pitch -1\nrow A\n"), SpecError);
}

TEST_CASE("hit testing is half-open") {
  auto layout = bundled_layout("ansi104");
  const Key& q = layout->at(KeyId("KeyQ"));
  CHECK(layout->key_at(q.rect.center()) == KeyId("KeyQ"));
  CHECK(layout->key_at({q.rect.x + q.rect.width + 0.5, q.rect.center().y}) == std::nullopt);

  auto tight = from_text("gap 0\nrow A B\n");
  const Rect a = tight.at(KeyId("A")).rect;
  CHECK(tight.key_at({a.x + a.width, a.center().y}) == KeyId("B"));
  CHECK(tight.key_at({a.x, a.y}) == KeyId("A"));
}

TEST_CASE("random specs never overlap and fit their bounding box") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::ostringstream spec;
    spec << "name r" << trial << "\ngap " << (rng.below(3) * 0.5) << "\n";
    const int rows = 1 + static_cast<int>(rng.below(5));
    int id = 0;
    for (int r = 0; r < rows; ++r) {
      spec << "row";
      if (rng.below(2)) spec << " +0.5";
      const int n = 1 + static_cast<int>(rng.below(8));
      for (int i = 0; i < n; ++i) {
        if (rng.below(6) == 0) spec << " _:" << (1 + rng.below(2)) * 0.25;
        spec << " K" << id++ << ":" << 1.0 + 0.25 * static_cast<double>(rng.below(5));
      }
      spec << "\n";
    }
    const auto layout = from_text(spec.str());
    double area = 0.0;
    const auto keys = layout.keys();
    for (std::size_t i = 0; i < keys.size(); ++i) {
      area += keys[i].rect.area();
      for (std::size_t j = i + 1; j < keys.size(); ++j) CHECK_FALSE(keys[i].rect.intersects(keys[j].rect));
    }
    CHECK(area <= layout.bounds().area() + 1e-9);
    CHECK(from_text(spec.str()).to_json().dump() == layout.to_json().dump());
  }
}

TEST_CASE("layout JSON round trip") {
  auto layout = bundled_layout("iso105");
  const auto doc = layout->to_json();
  CHECK(KeyboardLayout::from_json(doc).to_json() == doc);
}

TEST_CASE("letter regions") {
  auto layout = bundled_layout("ansi104");
  const KeySet letters = letter_keys(*layout);
  const auto regions = partition_regions(*layout, letters, 6);
  CHECK(regions.size() == 4);
  check_partition(*layout, letters, 6);

  KeySet group = letters;
  for (const KeyId& d : digit_keys(*layout)) group.insert(d);
  for (int k = 1; k <= 12; ++k) check_partition(*layout, group, k);
  CHECK(partition_regions(*layout, group, 1).size() == group.size());
  CHECK(partition_regions(*layout, group, static_cast<int>(group.size())).size() == 1);
  CHECK_THROWS_AS(partition_regions(*layout, letters, 27), ParameterError);
  CHECK_THROWS_AS(partition_regions(*layout, letters, 0), ParameterError);
}
