#include <map>

#include "doctest.h"
#include "keyreconf/assets.hpp"
#include "keyreconf/errors.hpp"
#include "keyreconf/shuffle.hpp"
#include "shuffle_props.hpp"
#include "stats.hpp"

using namespace keyreconf;
using keyreconf::testing::chi_square_uniform;
using keyreconf::testing::shuffle_violation;

namespace {

const std::vector<ShuffleStrategy> kStrategies{RegionShuffle{6}, RegionShuffle{3}, RowShuffle{}, FullShuffle{}};

}  // namespace

TEST_CASE("strategy names round trip") {
  for (const auto& s : kStrategies) {
    CHECK(parse_strategy(strategy_name(s)) == s);
    CHECK(strategy_from_json(strategy_to_json(s)) == s);
  }
  CHECK(parse_strategy("region") == ShuffleStrategy{RegionShuffle{6}});
  CHECK_THROWS_AS(parse_strategy("spiral"), ParameterError);
  CHECK_THROWS_AS(parse_strategy("region:x"), ParameterError);
}

TEST_CASE("orbits follow the strategy") {
  auto layout = bundled_layout("ansi104");
  const KeySet group = default_shuffle_group(*layout);
  CHECK(group.size() == 36);
  CHECK(shuffle_orbits(*layout, group, FullShuffle{}).size() == 1);
  // Digits, QWERTY row, home row, bottom row.
  CHECK(shuffle_orbits(*layout, group, RowShuffle{}).size() == 4);
  const auto regions = partition_regions(*layout, group, 6);
  const auto orbits = shuffle_orbits(*layout, group, RegionShuffle{6});
  REQUIRE(orbits.size() == regions.size());
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    CHECK(KeySet(orbits[i].begin(), orbits[i].end()) == regions[i].members);
  }
}

TEST_CASE("structural properties hold across seeds") {
  auto layout = bundled_layout("ansi104");
  const KeySet group = default_shuffle_group(*layout);
  for (const auto& strategy : kStrategies) {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const auto s = shuffle(layout, group, strategy, Seed{seed});
      const std::string why = shuffle_violation(*layout, group, s);
      CHECK_MESSAGE(why.empty(), strategy_name(strategy) << " seed " << seed << ": " << why);
    }
  }
}

TEST_CASE("shuffles are reproducible and seed-sensitive") {
  auto layout = bundled_layout("ansi104");
  const KeySet group = default_shuffle_group(*layout);
  const auto a = shuffle(layout, group, FullShuffle{}, Seed{7});
  const auto b = shuffle(layout, group, FullShuffle{}, Seed{7});
  const auto c = shuffle(layout, group, FullShuffle{}, Seed{8});
  CHECK(a.perm() == b.perm());
  CHECK(a.to_json() == b.to_json());
  CHECK(a.perm() != c.perm());
}

TEST_CASE("keys outside the group keep their legends") {
  auto layout = bundled_layout("ansi104");
  const auto s = shuffle(layout, default_shuffle_group(*layout), FullShuffle{}, Seed{3});
  CHECK(decode_press(s, KeyId("Space")) == layout->at(KeyId("Space")).default_legend);
  CHECK(s.orbit_size(KeyId("Enter")) == 1);
  CHECK(s.orbit_of(KeyId("Enter")).empty());
  const auto visuals = legend_render(s);
  for (const KeyId& pos : s.group()) CHECK(visuals.at(pos).glyph == decode_press(s, pos));
}

TEST_CASE("a one-key group is the identity") {
  auto layout = bundled_layout("ansi104");
  const auto s = shuffle(layout, KeySet{KeyId("KeyQ")}, FullShuffle{}, Seed{11});
  CHECK(s.source(KeyId("KeyQ")) == KeyId("KeyQ"));
  for (const auto& [k, v] : legend_render(s)) CHECK(v.glyph == layout->at(k).default_legend);
}

TEST_CASE("per-keystroke reshuffles are derived from the session seed") {
  auto layout = bundled_layout("ansi104");
  const auto s = shuffle(layout, default_shuffle_group(*layout), RegionShuffle{6}, Seed{5});
  const auto r1 = reshuffle_for_keystroke(s, 1);
  CHECK(r1.perm() == reshuffle_for_keystroke(s, 1).perm());
  CHECK(r1.perm() != reshuffle_for_keystroke(s, 2).perm());
  CHECK(shuffle_violation(*layout, s.group(), r1).empty());
}

TEST_CASE("a fixed key sees every orbit member equally often") {
  auto layout = bundled_layout("ansi104");
  const KeySet group = default_shuffle_group(*layout);
  for (const auto& strategy : kStrategies) {
    const KeyId probe("KeyF");
    const auto reference = shuffle(layout, group, strategy, Seed{0});
    const auto orbit = reference.orbit_of(probe);
    std::map<KeyId, std::size_t> slot;
    for (std::size_t i = 0; i < orbit.size(); ++i) slot[orbit[i]] = i;
    std::vector<std::uint64_t> counts(orbit.size(), 0);
    for (std::uint64_t seed = 0; seed < 20000; ++seed) {
      ++counts[slot.at(shuffle(layout, group, strategy, Seed{seed}).source(probe))];
    }
    const auto chi = chi_square_uniform(counts);
    CHECK_MESSAGE(chi.p_value > 0.001, strategy_name(strategy) << " chi2=" << chi.statistic << " dof=" << chi.dof);
  }
}

TEST_CASE("chi-square tail helper") {
  // Known quantiles: chi2(1) at 3.841 and chi2(10) at 23.209 have p = 0.05 and 0.01.
  CHECK(keyreconf::testing::gamma_q(0.5, 3.841 / 2) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(keyreconf::testing::gamma_q(5.0, 23.209 / 2) == doctest::Approx(0.01).epsilon(1e-3));
}
