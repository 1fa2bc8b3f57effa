// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "entry_grid.hpp"
#include "keyreconf/app_profiles.hpp"
#include "keyreconf/assets.hpp"
#include "keyreconf/errors.hpp"
#include "keyreconf/metrics.hpp"
#include "keyreconf/security_model.hpp"
#include "keyreconf/session.hpp"
#include "keyreconf/shuffle.hpp"
#include "keyreconf/simulation.hpp"
#include "observer_oracle.hpp"
#include "shuffle_props.hpp"
#include "stats.hpp"

#ifndef KEYRECONF_GOLDEN_DIR
#error "KEYRECONF_GOLDEN_DIR must point at the golden session logs"
#endif

using namespace keyreconf;
using keyreconf::testing::brute_observer;
using keyreconf::testing::chi_square_uniform;
using keyreconf::testing::grid_password;
using keyreconf::testing::k_group_shuffle;
using keyreconf::testing::shuffle_violation;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail += " (over the " + std::to_string(budget_s) + " s budget)";
  }
  if (!o.pass) ++failures;
  std::printf("%s %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

TimingParams timing(double alpha) {
  TimingParams t;
  t.keystroke_s = 0.5;
  t.decision_s = 0.24;
  t.memory = alpha;
  return t;
}

// k^-n with an exact integer power where it fits.
double inverse_power(int k, int n) {
  long double p = 1.0L;
  for (int i = 0; i < n; ++i) p *= static_cast<long double>(k);
  return static_cast<double>(1.0L / p);
}

Outcome required_size() {
  const int k = required_shuffle_size(1e-6, 8);
  return {k == 6, fmt("required_shuffle_size(1e-6, 8) = %d, want 6", k)};
}

Outcome entry_time_reference() {
  const double fast = expected_entry_time(8, 6, timing(1.0));
  const double slow = expected_entry_time(8, 6, timing(0.0));
  // Hand arithmetic: 8 keystrokes of 0.5 s, one decision of 6*0.24 s, and
  // without memory 7 further rescans of 6*0.24 s.
  const double fast_hand = 8 * 0.5 + 6 * 0.24;
  const double slow_hand = 8 * 0.5 + 7 * 6 * 0.24 + 6 * 0.24;
  const bool ok = std::abs(fast - 5.44) <= 1e-12 && std::abs(slow - 15.52) <= 1e-12 &&
                  std::abs(fast - fast_hand) <= 1e-12 && std::abs(slow - slow_hand) <= 1e-12 &&
                  std::abs(fast - 5.5) <= 0.1 && std::abs(slow - 15.5) <= 0.1;
  return {ok, fmt("T(alpha=1) = %.12f, T(alpha=0) = %.12f", fast, slow)};
}

Outcome entry_rate_span() {
  const auto lo = predicted_entry_rate(8, 6, timing(0.0));
  const auto hi = predicted_entry_rate(8, 6, timing(1.0));
  const bool ok = std::abs(lo.cps - 0.515) <= 0.02 && std::abs(hi.cps - 1.47) <= 0.02 &&
                  std::abs(lo.wpm - 6.19) <= 0.2 && std::abs(hi.wpm - 17.6) <= 0.2 &&
                  std::abs(lo.cps - 8 / 15.52) <= 1e-12 && std::abs(hi.wpm - 8 / 5.44 * 12.0) <= 1e-9;
  return {ok, fmt("cps %.4f..%.4f, wpm %.3f..%.3f", lo.cps, hi.cps, lo.wpm, hi.wpm)};
}

Outcome observer() {
  std::size_t checked = 0;
  double worst = 0.0;
  for (int k = 1; k <= 1000000; ++k) {
    std::uint64_t total = 1;
    for (int n = 1; n <= 64; ++n) {
      total *= static_cast<std::uint64_t>(k);
      if (total > 1000000) break;
      const double exact = observer_attack(k, n, 0, Seed{0}, AttackMode::Exact).probability;
      const double want = guess_probability(k, n);
      const double oracle = inverse_power(k, n);
      worst = std::max({worst, std::abs(exact - want) / want, std::abs(exact - oracle) / oracle});
      ++checked;
    }
  }
  // Full enumeration of password and observation for small alphabets.
  std::size_t brute = 0;
  for (int k = 1; k <= 6; ++k) {
    for (int n = 1; std::pow(k, n) <= 256 && n <= 8; ++n) {
      const double p = observer_attack(k, n, 0, Seed{0}, AttackMode::Exact).probability;
      worst = std::max(worst, std::abs(p - brute_observer(k, n, false)) / p);
      ++brute;
    }
  }
  const std::uint64_t trials = 10000000;
  const auto mc = observer_attack(6, 8, trials, Seed{2024}, AttackMode::MonteCarlo);
  const double p = 5.954e-7;
  const double sigma = std::sqrt(static_cast<double>(trials) * p * (1 - p));
  const double expected = static_cast<double>(trials) * p;
  const double z = (static_cast<double>(mc.successes) - expected) / sigma;
  const bool ok = worst <= 1e-12 && std::abs(z) <= 3.0 && checked > 0;
  return {ok, fmt("%zu exact cases (%zu brute-forced), worst rel err %.2e; MC %llu/%llu hits, z = %.2f", checked,
                  brute, worst, static_cast<unsigned long long>(mc.successes),
                  static_cast<unsigned long long>(trials), z)};
}

Outcome deterministic_grid() {
  auto layout = bundled_layout("ansi104");
  SimulatedTypist typist;
  typist.mode = SimulationMode::Deterministic;
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  std::string first;
  for (int k = 1; k <= 40; ++k) {
    const auto shuffled = k_group_shuffle(layout, k, static_cast<std::uint64_t>(k));
    for (int n = 1; n <= 20; ++n) {
      const std::string pw = grid_password(*layout, k, n);
      for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        typist.timing = timing(alpha);
        const auto r = simulate_entry(typist, shuffled, pw, Seed{static_cast<std::uint64_t>(n)});
        ++cases;
        if (r.duration_s != expected_entry_time(n, k, typist.timing) || r.response != pw) {
          if (mismatches++ == 0) first = fmt(" first at n=%d k=%d alpha=%.2f", n, k, alpha);
        }
      }
    }
  }
  return {mismatches == 0 && cases == 4000, fmt("%zu cases, %zu mismatches%s", cases, mismatches, first.c_str())};
}

Outcome shuffle_suite() {
  auto layout = bundled_layout("ansi104");
  const KeySet group = default_shuffle_group(*layout);
  const std::vector<ShuffleStrategy> strategies{FullShuffle{}, RowShuffle{}, RegionShuffle{6}};
  std::string problems;
  for (const auto& strategy : strategies) {
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      const std::string why = shuffle_violation(*layout, group, shuffle(layout, group, strategy, Seed{seed}));
      if (!why.empty()) {
        problems += " " + strategy_name(strategy) + " seed " + std::to_string(seed) + ": " + why;
        break;
      }
    }
  }
  std::string chis;
  bool uniform = true;
  const KeyId probe("KeyF");
  for (const auto& strategy : strategies) {
    const auto reference = shuffle(layout, group, strategy, Seed{0});
    const auto orbit = reference.orbit_of(probe);
    std::map<KeyId, std::size_t> slot;
    for (std::size_t i = 0; i < orbit.size(); ++i) slot[orbit[i]] = i;
    std::vector<std::uint64_t> counts(orbit.size(), 0);
    for (std::uint64_t seed = 0; seed < 50000; ++seed) {
      ++counts[slot.at(shuffle(layout, group, strategy, Seed{seed}).source(probe))];
    }
    const auto chi = chi_square_uniform(counts);
    uniform = uniform && chi.p_value > 0.01;
    chis += fmt(" %s p=%.3f", strategy_name(strategy).c_str(), chi.p_value);
  }
  return {problems.empty() && uniform, "30000 layouts checked;" + chis + problems};
}

// Seek targets emitted after pressing `keys` 5 ms apart on a fresh session.
std::vector<double> seeks_for(const std::vector<KeyId>& keys) {
  SessionOptions o;
  o.profile = "virtual_touchbar";
  Session s("acceptance", o);
  std::int64_t t = 0;
  for (const KeyId& k : keys) {
    s.handle_event({t, k, Edge::Down});
    t += 5;
  }
  s.tick(1000);
  std::vector<double> out;
  for (const LogRecord& r : s.log().records) {
    if (r.kind != LogRecord::Kind::Action) continue;
    if (const auto* seek = std::get_if<SeekTo>(&r.action)) out.push_back(seek->seconds);
  }
  return out;
}

Outcome touch_bar() {
  auto layout = bundled_layout("ansi104");
  const auto order = build_bundled_profile("virtual_touchbar", layout).chord_order;
  if (order.size() != 10) return {false, fmt("%zu touch keys, want 10", order.size())};
  std::string bad;
  for (std::size_t i = 1; i <= 10; ++i) {
    const auto solo = seeks_for({order[i - 1]});
    const double want = 100.0 * static_cast<double>(i) / 10.0;
    if (solo.size() != 1 || std::abs(solo[0] - want) > 1e-9) bad += fmt(" key %zu", i);
    if (i < 10) {
      const auto pair = seeks_for({order[i - 1], order[i]});
      const double mid = (want + 100.0 * static_cast<double>(i + 1) / 10.0) / 2.0;
      if (pair.size() != 1 || std::abs(pair[0] - mid) > 1e-9) bad += fmt(" pair %zu", i);
    }
  }
  const auto one = seeks_for({order[0]});
  const auto both = seeks_for({order[0], order[1]});
  const bool ref = one.size() == 1 && one[0] == 10.0 && both.size() == 1 && both[0] == 15.0;
  return {bad.empty() && ref, "key 1 -> " + (one.empty() ? std::string("none") : fmt("%g", one[0])) +
                                  ", {1,2} -> " + (both.empty() ? std::string("none") : fmt("%g", both[0])) + bad};
}

// Textbook Levenshtein table over symbol indices.
std::size_t dp_distance(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

Outcome cer_oracle() {
  // Mixed-width UTF-8 symbols so byte and code point counts differ.
  const std::vector<std::string> symbols{"a", "b", "c", "0", "ä", "д", "😀"};
  std::mt19937_64 rng(99);
  std::size_t bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto draw = [&](std::size_t min_len) {
      std::vector<int> v(min_len + rng() % (13 - min_len));
      for (int& c : v) c = static_cast<int>(rng() % symbols.size());
      return v;
    };
    const auto a = draw(1);
    const auto b = draw(0);
    std::string sa, sb;
    for (int c : a) sa += symbols[static_cast<std::size_t>(c)];
    for (int c : b) sb += symbols[static_cast<std::size_t>(c)];
    const double want = static_cast<double>(dp_distance(a, b)) / static_cast<double>(a.size());
    if (cer(sa, sb) != want) ++bad;
  }
  const double ref = cer("password", "passw0rd");
  return {bad == 0 && ref == 0.125, fmt("1000 pairs, %zu mismatches; cer(password, passw0rd) = %g", bad, ref)};
}

Outcome golden_replay() {
  std::set<std::string> profiles;
  std::size_t logs = 0;
  std::string problems;
  for (const auto& entry : std::filesystem::directory_iterator(KEYRECONF_GOLDEN_DIR)) {
    if (entry.path().extension() != ".jsonl") continue;
    ++logs;
    try {
      const SessionLog recorded = load_session_log(entry.path());
      replay(recorded);
      profiles.insert(recorded.header.profile);
    } catch (const std::exception& e) {
      problems += " " + entry.path().filename().string() + ": " + e.what();
    }
  }
  std::string missing;
  for (const auto& name : bundled_profile_names()) {
    if (!profiles.count(name)) missing += " " + name;
  }
  return {problems.empty() && missing.empty() && logs > 0,
          fmt("%zu logs, %zu profiles covered", logs, profiles.size()) + (missing.empty() ? "" : "; missing" + missing) +
              problems};
}

Outcome campaign_order() {
  CampaignConfig cfg;
  cfg.strategies = {FullShuffle{}, RowShuffle{}, RegionShuffle{6}};
  cfg.typist.timing = timing(0.5);
  cfg.passwords = {"pa55word", "qwerty12", "zx81spec", "letmein9", "h0rse4ba"};
  for (std::uint64_t s = 1; s <= 20; ++s) cfg.seeds.push_back(s);
  const auto report = run_campaign(cfg, bundled_layout(cfg.layout));
  if (report.summaries.size() != 3) return {false, "expected three summaries"};
  const double full = report.summaries[0].mean_duration_s;
  const double row = report.summaries[1].mean_duration_s;
  const double region = report.summaries[2].mean_duration_s;
  return {full > row && full > region, fmt("mean T: full %.3f s, row %.3f s, region:6 %.3f s", full, row, region)};
}

}  // namespace

int main() {
  run("required shuffle size for 1e-6 at length 8", 1, required_size);
  run("expected entry time at n=8 k=6", 1, entry_time_reference);
  run("entry rate span over memory 0..1", 1, entry_rate_span);
  run("observer exact and Monte Carlo", 60, observer);
  run("deterministic simulation equals closed form on the grid", 5, deterministic_grid);
  run("shuffle properties and orbit uniformity", 60, shuffle_suite);
  run("touch bar seek targets", 1, touch_bar);
  run("character error rate against DP oracle", 10, cer_oracle);
  run("golden session logs replay", 10, golden_replay);
  run("campaign entry time ordering", 60, campaign_order);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
