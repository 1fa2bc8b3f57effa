#include "keyreconf/security_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <tuple>

#include "keyreconf/errors.hpp"

namespace keyreconf {
namespace {

using u128 = unsigned __int128;

// k^n, or nullopt when it does not fit in 127 bits.
std::optional<u128> exact_power(std::uint64_t base, int exponent) {
  constexpr u128 kLimit = static_cast<u128>(1) << 127;
  u128 acc = 1;
  for (int i = 0; i < exponent; ++i) {
    if (base != 0 && acc > kLimit / base) return std::nullopt;
    acc *= base;
  }
  return acc;
}

// k^n >= threshold, with threshold = 1 / p as a double.
bool meets_target(int k, int n, double threshold) {
  if (threshold <= 1.0) return true;
  if (auto pow = exact_power(static_cast<std::uint64_t>(k), n)) {
    if (threshold >= std::ldexp(1.0, 127)) return false;
    // threshold is finite and below 2^127, so its ceiling is exact in u128.
    const double ceil_t = std::ceil(threshold);
    const u128 needed = static_cast<u128>(ceil_t);
    return *pow >= needed;
  }
  // Log domain; compare with a one-ulp margin on both sides.
  const double lhs = n * std::log(static_cast<double>(k));
  const double rhs = std::log(threshold);
  return lhs >= std::nextafter(rhs, -std::numeric_limits<double>::infinity());
}

void require_positive(int v, const char* what) {
  if (v < 1) throw ParameterError(std::string(what) + " must be >= 1");
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void TimingParams::validate() const {
  if (!(keystroke_s > 0.0)) throw ParameterError("KT must be > 0");
  if (!(decision_s > 0.0)) throw ParameterError("DT must be > 0");
  if (!(memory >= 0.0 && memory <= 1.0)) throw ParameterError("alpha must be in [0, 1]");
}

double guess_probability(int shuffled_keys, int length) {
  require_positive(shuffled_keys, "k");
  require_positive(length, "n");
  return std::exp(-static_cast<double>(length) * std::log(static_cast<double>(shuffled_keys)));
}

int required_shuffle_size(double target_probability, int length) {
  require_positive(length, "n");
  if (!(target_probability > 0.0 && target_probability <= 1.0)) {
    throw ParameterError("target probability must be in (0, 1]");
  }
  const double threshold = 1.0 / target_probability;
  if (!std::isfinite(threshold)) throw ParameterError("target probability too small to invert");
  double estimate = std::ceil(std::exp(std::log(threshold) / length));
  int k = static_cast<int>(std::clamp(estimate, 1.0, static_cast<double>(std::numeric_limits<int>::max() - 1)));
  while (k > 1 && meets_target(k - 1, length, threshold)) --k;
  while (!meets_target(k, length, threshold)) ++k;
  return k;
}

double expected_entry_time(int length, int shuffled_keys, const TimingParams& timing) {
  require_positive(length, "n");
  require_positive(shuffled_keys, "k");
  timing.validate();
  const double n = length;
  const double k = shuffled_keys;
  const double kt = timing.keystroke_s;
  const double dt = timing.decision_s;
  const double alpha = timing.memory;
  return n * kt + (1.0 - alpha) * (n - 1.0) * (k * dt) + k * dt;
}

EntryRate predicted_entry_rate(int length, int shuffled_keys, const TimingParams& timing) {
  const double t = expected_entry_time(length, shuffled_keys, timing);
  const double cps = length / t;
  return {cps, cps * 60.0 / 5.0};
}

TradeoffPoint make_tradeoff_point(int length, int shuffled_keys, const TimingParams& timing) {
  TradeoffPoint p;
  p.length = length;
  p.shuffled_keys = shuffled_keys;
  p.memory = timing.memory;
  p.keystroke_s = timing.keystroke_s;
  p.decision_s = timing.decision_s;
  p.probability = guess_probability(shuffled_keys, length);
  p.time_s = expected_entry_time(length, shuffled_keys, timing);
  const EntryRate rate = predicted_entry_rate(length, shuffled_keys, timing);
  p.cps = rate.cps;
  p.wpm = rate.wpm;
  return p;
}

bool TradeoffPoint::consistent() const {
  const TimingParams t{keystroke_s, decision_s, memory};
  const TradeoffPoint again = make_tradeoff_point(length, shuffled_keys, t);
  return again.probability == probability && again.time_s == time_s && again.cps == cps &&
         again.wpm == wpm;
}

std::vector<TradeoffPoint> tradeoff_table(const std::vector<int>& lengths,
                                          const std::vector<int>& shuffled_keys,
                                          const std::vector<double>& memories,
                                          const TimingParams& timing) {
  if (lengths.empty()) throw ParameterError("tradeoff table needs at least one password length");
  if (shuffled_keys.empty()) throw ParameterError("tradeoff table needs at least one k");
  if (memories.empty()) throw ParameterError("tradeoff table needs at least one alpha");
  std::vector<TradeoffPoint> rows;
  rows.reserve(lengths.size() * shuffled_keys.size() * memories.size());
  for (int n : lengths) {
    for (int k : shuffled_keys) {
      for (double alpha : memories) {
        TimingParams t = timing;
        t.memory = alpha;
        rows.push_back(make_tradeoff_point(n, k, t));
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
    return std::tie(a.length, a.shuffled_keys, a.memory) < std::tie(b.length, b.shuffled_keys, b.memory);
  });
  return rows;
}

const std::vector<std::string>& model_assumptions() {
  static const std::vector<std::string> assumptions = {
      "passwords are uniformly random over the shuffled keys",
      "the observer always infers the pressed key position",
      "the observer knows the shuffling scheme; only the permutation is secret",
  };
  return assumptions;
}

std::string tradeoff_csv(const std::vector<TradeoffPoint>& table) {
  std::ostringstream out;
  out << "n,k,alpha,KT,DT,p,T,cps,wpm\n";
  for (const TradeoffPoint& p : table) {
    out << p.length << ',' << p.shuffled_keys << ',' << fmt_double(p.memory) << ','
        << fmt_double(p.keystroke_s) << ',' << fmt_double(p.decision_s) << ','
        << fmt_double(p.probability) << ',' << fmt_double(p.time_s) << ',' << fmt_double(p.cps)
        << ',' << fmt_double(p.wpm) << '\n';
  }
  for (const std::string& a : model_assumptions()) out << "# assumption: " << a << '\n';
  return out.str();
}

nlohmann::json tradeoff_json(const std::vector<TradeoffPoint>& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const TradeoffPoint& p : table) {
    rows.push_back({{"n", p.length},
                    {"k", p.shuffled_keys},
                    {"alpha", p.memory},
                    {"KT", p.keystroke_s},
                    {"DT", p.decision_s},
                    {"p", p.probability},
                    {"T", p.time_s},
                    {"cps", p.cps},
                    {"wpm", p.wpm}});
  }
  return {{"assumptions", model_assumptions()}, {"rows", std::move(rows)}};
}

}  // namespace keyreconf
