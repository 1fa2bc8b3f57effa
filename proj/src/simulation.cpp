#include "keyreconf/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include "keyreconf/errors.hpp"
#include "keyreconf/metrics.hpp"

namespace keyreconf {
namespace {

constexpr double kZ95 = 1.959963984540054;

void wilson_interval(AttackEstimate& e) {
  const double n = static_cast<double>(e.trials);
  const double p = e.probability;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = kZ95 * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  e.ci_low = std::max(0.0, centre - half);
  e.ci_high = std::min(1.0, centre + half);
}

AttackEstimate exact_estimate(double p) {
  AttackEstimate e;
  e.probability = p;
  e.ci_low = p;
  e.ci_high = p;
  e.exact = true;
  return e;
}

AttackEstimate sampled_estimate(std::uint64_t successes, std::uint64_t trials) {
  AttackEstimate e;
  e.successes = successes;
  e.trials = trials;
  e.probability = static_cast<double>(successes) / static_cast<double>(trials);
  wilson_interval(e);
  return e;
}

bool within_enumeration_limit(std::uint64_t alphabet, int length) {
  std::uint64_t total = 1;
  for (int i = 0; i < length; ++i) {
    if (total > kExactEnumerationLimit / alphabet) return false;
    total *= alphabet;
  }
  return total <= kExactEnumerationLimit;
}

// Legend -> source key, group keys first so numpad digits never shadow
// the shuffled digit row.
std::map<std::string, KeyId> legend_index(const ShuffledLayout& shuffled) {
  std::map<std::string, KeyId> index;
  for (const Key& k : shuffled.base().keys()) {
    if (shuffled.group().contains(k.id)) index.emplace(k.default_legend, k.id);
  }
  for (const Key& k : shuffled.base().keys()) index.emplace(k.default_legend, k.id);
  return index;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

TrialResult simulate_entry(const SimulatedTypist& typist, const ShuffledLayout& shuffled,
                           std::string_view password, Seed seed) {
  typist.timing.validate();
  const double kt = typist.timing.keystroke_s;
  const double dt = typist.timing.decision_s;
  const double alpha = typist.timing.memory;
  const bool deterministic = typist.mode == SimulationMode::Deterministic;

  const auto legends = legend_index(shuffled);
  Rng rng(seed.value);

  TrialResult result;
  result.stimulus = std::string(password);

  double clock = 0.0;
  double presses = 0.0;
  double first_scan_keys = 0.0;
  bool scanned = false;
  // Deterministic mode: expected rescans, bucketed by orbit size.
  std::map<std::size_t, double> rescans;
  double orbit_sum = 0.0;
  std::size_t shuffled_chars = 0;

  for (char32_t cp : utf8_decode(password)) {
    std::string intended = utf8_encode(std::u32string(1, cp));
    std::string typed = typist.confusion ? typist.confusion(intended, rng) : intended;
    auto it = legends.find(typed);
    if (it == legends.end()) throw InputError("character '" + typed + "' is not on the layout");
    const KeyId physical = shuffled.position_of(it->second);

    if (shuffled.group().contains(it->second)) {
      const auto orbit = shuffled.orbit_of(physical);
      const std::size_t size = orbit.size();
      orbit_sum += static_cast<double>(size);
      ++shuffled_chars;

      double inspected = static_cast<double>(size);
      if (typist.stop_at_target) {
        if (deterministic) {
          inspected = (static_cast<double>(size) + 1.0) / 2.0;
        } else {
          std::vector<KeyId> order(orbit.begin(), orbit.end());
          if (typist.scan_policy == ScanPolicy::Random) fisher_yates(std::span<KeyId>(order), rng);
          auto pos = std::find(order.begin(), order.end(), physical);
          inspected = static_cast<double>(pos - order.begin() + 1);
        }
      }

      if (!scanned) {
        scanned = true;
        first_scan_keys = inspected;
        clock += inspected * dt;
      } else if (deterministic) {
        rescans[size] += 1.0;
        clock += (1.0 - alpha) * (inspected * dt);
      } else if (!(rng.uniform() < alpha)) {
        clock += inspected * dt;
      }
    }

    clock += kt;
    presses += 1.0;
    result.keystrokes.push_back(Keystroke{static_cast<std::int64_t>(std::llround(clock * 1000.0)), physical});
    result.response += decode_press(shuffled, physical);
  }

  if (deterministic) {
    // Same association order as expected_entry_time, so a uniform orbit
    // size reproduces it bit for bit.
    double rescan_time = 0.0;
    for (const auto& [size, count] : rescans) {
      if (typist.stop_at_target) {
        rescan_time += (1.0 - alpha) * count * (((static_cast<double>(size) + 1.0) / 2.0) * dt);
      } else {
        rescan_time += (1.0 - alpha) * count * (static_cast<double>(size) * dt);
      }
    }
    result.duration_s = presses * kt + rescan_time + first_scan_keys * dt;
  } else {
    result.duration_s = clock;
  }
  result.mean_orbit_size = shuffled_chars ? orbit_sum / static_cast<double>(shuffled_chars) : 0.0;
  return result;
}

AttackEstimate observer_attack(int alphabet_size, int length, std::uint64_t trials, Seed seed,
                               AttackMode mode, Observer observer) {
  if (alphabet_size < 1) throw ParameterError("alphabet size must be >= 1");
  if (length < 1) throw ParameterError("password length must be >= 1");
  const auto k = static_cast<std::uint64_t>(alphabet_size);

  if (mode == AttackMode::Exact) {
    if (!within_enumeration_limit(k, length)) {
      throw ParameterError("exact mode needs k^n <= " + std::to_string(kExactEnumerationLimit));
    }
    if (!observer.layout_persists) {
      // Keystrokes are independent and every password is consistent with
      // k^n candidates; enumerate the single class.
      long double per_key = 1.0L / static_cast<long double>(k);
      long double p = 1.0L;
      for (int i = 0; i < length; ++i) p *= per_key;
      return exact_estimate(static_cast<double>(p));
    }
    // Persistent layout: passwords are classed by their number d of
    // distinct symbols; a class-d password is consistent with k!/(k-d)!
    // candidates. by_distinct[d] = P(d distinct after i characters).
    std::vector<long double> by_distinct(static_cast<std::size_t>(length) + 2, 0.0L);
    by_distinct[0] = 1.0L;
    const long double kk = static_cast<long double>(k);
    for (int i = 0; i < length; ++i) {
      std::vector<long double> next(by_distinct.size(), 0.0L);
      for (std::size_t d = 0; d <= static_cast<std::size_t>(i); ++d) {
        if (by_distinct[d] == 0.0L) continue;
        next[d] += by_distinct[d] * (static_cast<long double>(d) / kk);
        if (d < k) next[d + 1] += by_distinct[d] * ((kk - static_cast<long double>(d)) / kk);
      }
      by_distinct = std::move(next);
    }
    long double p = 0.0L;
    for (std::size_t d = 1; d < by_distinct.size(); ++d) {
      long double falling = 1.0L;
      for (std::size_t j = 0; j < d; ++j) falling *= kk - static_cast<long double>(j);
      if (falling > 0.0L) p += by_distinct[d] / falling;
    }
    return exact_estimate(static_cast<double>(p));
  }

  if (trials < 1) throw ParameterError("Monte Carlo needs at least one trial");
  if (k == 1) return sampled_estimate(trials, trials);
  Rng rng(seed.value);
  std::uint64_t successes = 0;
  std::vector<std::int64_t> guess_for(observer.layout_persists ? k : 0);
  for (std::uint64_t t = 0; t < trials; ++t) {
    bool ok = true;
    if (!observer.layout_persists) {
      for (int i = 0; i < length && ok; ++i) {
        const std::uint64_t symbol = rng.below(k);
        const std::uint64_t guess = rng.below(k);
        ok = guess == symbol;
      }
    } else {
      // The observer sees one position per distinct symbol and assigns
      // each new position a legend not yet used in its guess.
      std::fill(guess_for.begin(), guess_for.end(), -1);
      std::uint64_t used = 0;
      for (int i = 0; i < length && ok; ++i) {
        const std::uint64_t symbol = rng.below(k);
        if (guess_for[symbol] >= 0) continue;
        // Index 0 among the unused legends stands for the true one.
        guess_for[symbol] = static_cast<std::int64_t>(rng.below(k - used));
        ok = guess_for[symbol] == 0;
        ++used;
      }
    }
    if (ok) ++successes;
  }
  return sampled_estimate(successes, trials);
}

std::vector<std::size_t> candidate_sizes(const ShuffleStrategy& strategy,
                                         const KeyboardLayout& layout, const KeySet& group) {
  std::vector<std::size_t> sizes;
  for (const auto& orbit : shuffle_orbits(layout, group, strategy)) {
    sizes.insert(sizes.end(), orbit.size(), orbit.size());
  }
  return sizes;
}

AttackEstimate observer_attack(const ShuffleStrategy& strategy, const KeyboardLayout& layout,
                               const KeySet& group, int length, std::uint64_t trials, Seed seed,
                               AttackMode mode) {
  if (length < 1) throw ParameterError("password length must be >= 1");
  const auto sizes = candidate_sizes(strategy, layout, group);
  const auto m = static_cast<std::uint64_t>(sizes.size());

  if (mode == AttackMode::Exact) {
    if (!within_enumeration_limit(m, length)) {
      throw ParameterError("exact mode needs |group|^n <= " + std::to_string(kExactEnumerationLimit));
    }
    // Characters are independent; per character the success chance is the
    // mean of 1/|candidates| over the uniformly chosen key.
    std::map<std::size_t, std::uint64_t> by_size;
    for (std::size_t s : sizes) ++by_size[s];
    long double per_key = 0.0L;
    for (const auto& [size, count] : by_size) {
      per_key += static_cast<long double>(count) / static_cast<long double>(m) /
                 static_cast<long double>(size);
    }
    long double p = 1.0L;
    for (int i = 0; i < length; ++i) p *= per_key;
    return exact_estimate(static_cast<double>(p));
  }

  if (trials < 1) throw ParameterError("Monte Carlo needs at least one trial");
  Rng rng(seed.value);
  std::uint64_t successes = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    bool ok = true;
    for (int i = 0; i < length && ok; ++i) {
      const std::size_t symbol = static_cast<std::size_t>(rng.below(m));
      const std::uint64_t orbit = sizes[symbol];
      // The true legend sits at a uniformly random slot of the orbit.
      const std::uint64_t truth = rng.below(orbit);
      const std::uint64_t guess = rng.below(orbit);
      ok = truth == guess;
    }
    if (ok) ++successes;
  }
  return sampled_estimate(successes, trials);
}

CampaignConfig campaign_from_json(const nlohmann::json& doc) {
  CampaignConfig cfg;
  for (const auto& s : doc.at("strategies")) cfg.strategies.push_back(strategy_from_json(s));
  if (doc.contains("timing")) {
    const auto& t = doc.at("timing");
    cfg.typist.timing.keystroke_s = t.value("KT", cfg.typist.timing.keystroke_s);
    cfg.typist.timing.decision_s = t.value("DT", cfg.typist.timing.decision_s);
    cfg.typist.timing.memory = t.value("alpha", cfg.typist.timing.memory);
  }
  const std::string mode = doc.value("mode", "stochastic");
  if (mode == "deterministic") {
    cfg.typist.mode = SimulationMode::Deterministic;
  } else if (mode == "stochastic") {
    cfg.typist.mode = SimulationMode::Stochastic;
  } else {
    throw ParameterError("unknown simulation mode '" + mode + "'");
  }
  const std::string scan = doc.value("scan_policy", "row_major");
  if (scan == "row_major") {
    cfg.typist.scan_policy = ScanPolicy::RowMajor;
  } else if (scan == "random") {
    cfg.typist.scan_policy = ScanPolicy::Random;
  } else {
    throw ParameterError("unknown scan policy '" + scan + "'");
  }
  cfg.typist.stop_at_target = doc.value("stop_at_target", false);
  cfg.passwords = doc.at("passwords").get<std::vector<std::string>>();
  cfg.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
  cfg.layout = doc.value("layout", cfg.layout);
  cfg.group = doc.value("group", std::vector<std::string>{});
  return cfg;
}

CampaignReport run_campaign(const CampaignConfig& config,
                            std::shared_ptr<const KeyboardLayout> layout) {
  if (config.strategies.empty()) throw ParameterError("campaign needs at least one strategy");
  if (config.passwords.empty()) throw ParameterError("campaign needs at least one password");
  if (config.seeds.empty()) throw ParameterError("campaign needs at least one seed");
  config.typist.timing.validate();

  KeySet group;
  if (config.group.empty()) {
    group = default_shuffle_group(*layout);
  } else {
    for (const auto& code : config.group) group.insert(KeyId(code));
  }

  auto run_strategy = [&](const ShuffleStrategy& strategy) {
    std::vector<CampaignRow> rows;
    for (std::uint64_t seed : config.seeds) {
      // One layout per entry session; the typist's stream is split from it.
      const ShuffledLayout shuffled = shuffle(layout, group, strategy, Seed{seed});
      for (std::size_t p = 0; p < config.passwords.size(); ++p) {
        const std::string& password = config.passwords[p];
        const TrialResult trial =
            simulate_entry(config.typist, shuffled, password, Seed{Rng::derive(seed, p)});
        CampaignRow row;
        row.strategy = strategy_name(strategy);
        row.seed = seed;
        row.password = password;
        row.password_len = utf8_length(password);
        row.k_eff = trial.mean_orbit_size;
        row.duration_s = trial.duration_s;
        row.wpm = wpm(trial.response, trial.duration_s);
        row.cer = cer(password, trial.response);
        rows.push_back(std::move(row));
      }
    }
    return rows;
  };

  std::vector<std::future<std::vector<CampaignRow>>> workers;
  workers.reserve(config.strategies.size());
  for (const auto& strategy : config.strategies) {
    workers.push_back(std::async(std::launch::async, run_strategy, std::cref(strategy)));
  }

  CampaignReport report;
  for (std::size_t i = 0; i < workers.size(); ++i) {
    std::vector<CampaignRow> rows = workers[i].get();
    StrategySummary summary;
    summary.strategy = strategy_name(config.strategies[i]);
    summary.trials = rows.size();
    std::vector<double> wpms, durations, keffs;
    for (const auto& r : rows) {
      wpms.push_back(r.wpm);
      durations.push_back(r.duration_s);
      keffs.push_back(r.k_eff);
    }
    summary.mean_wpm = mean(wpms);
    summary.sd_wpm = sample_sd(wpms);
    summary.mean_duration_s = mean(durations);
    summary.sd_duration_s = sample_sd(durations);
    summary.mean_k_eff = mean(keffs);
    report.summaries.push_back(summary);
    report.rows.insert(report.rows.end(), std::make_move_iterator(rows.begin()),
                       std::make_move_iterator(rows.end()));
  }
  return report;
}

std::string CampaignReport::to_csv() const {
  std::ostringstream out;
  out << "strategy,seed,password_len,k_eff,duration_s,wpm,cer\n";
  for (const auto& r : rows) {
    out << r.strategy << ',' << r.seed << ',' << r.password_len << ',' << fmt(r.k_eff) << ','
        << fmt(r.duration_s) << ',' << fmt(r.wpm) << ',' << fmt(r.cer) << '\n';
  }
  return out.str();
}

nlohmann::json CampaignReport::to_json() const {
  nlohmann::json jrows = nlohmann::json::array();
  for (const auto& r : rows) {
    jrows.push_back({{"strategy", r.strategy},
                     {"seed", r.seed},
                     {"password_len", r.password_len},
                     {"k_eff", r.k_eff},
                     {"duration_s", r.duration_s},
                     {"wpm", r.wpm},
                     {"cer", r.cer}});
  }
  nlohmann::json jsum = nlohmann::json::array();
  for (const auto& s : summaries) {
    jsum.push_back({{"strategy", s.strategy},
                    {"trials", s.trials},
                    {"mean_wpm", s.mean_wpm},
                    {"sd_wpm", s.sd_wpm},
                    {"mean_duration_s", s.mean_duration_s},
                    {"sd_duration_s", s.sd_duration_s},
                    {"mean_k_eff", s.mean_k_eff}});
  }
  nlohmann::json notes = {
      "row and region shuffles have per-key candidate sets; k_eff is their mean over the characters typed"};
  for (const std::string& a : model_assumptions()) notes.push_back("assumption: " + a);
  return {{"rows", std::move(jrows)}, {"summaries", std::move(jsum)}, {"notes", std::move(notes)}};
}

}  // namespace keyreconf
