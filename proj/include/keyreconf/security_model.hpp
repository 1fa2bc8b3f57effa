#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace keyreconf {

// Keystroke-level timing constants, in seconds.
struct TimingParams {
  double keystroke_s = 0.5;  // move to a key and press it (KT)
  double decision_s = 0.24;  // look at one key and decide (DT)
  double memory = 1.0;       // recall of the shuffled layout after one scan, in [0, 1]

  // Throws ParameterError if KT <= 0, DT <= 0 or memory outside [0, 1].
  void validate() const;
};

// Probability that an observer who sees every pressed position, knows the
// shuffling scheme and guesses uniformly recovers a random password of
// `length` characters when `shuffled_keys` keys are permuted:
// shuffled_keys^-length, evaluated as exp(-length * ln shuffled_keys).
double guess_probability(int shuffled_keys, int length);

// Smallest k with k^length >= 1/target, so a target of 1e-6 is read as
// exactly one in a million. The closed-form ceiling is corrected with exact
// 128-bit integer powers when they fit.
int required_shuffle_size(double target_probability, int length);

// Expected time to enter `length` characters on a layout with
// `shuffled_keys` shuffled keys: every character costs one keystroke, the
// first character costs a full scan, and each later one rescans with
// probability (1 - memory).
double expected_entry_time(int length, int shuffled_keys, const TimingParams& timing);

struct EntryRate {
  double cps = 0.0;
  double wpm = 0.0;  // five characters per word
};
EntryRate predicted_entry_rate(int length, int shuffled_keys, const TimingParams& timing);

struct TradeoffPoint {
  int length = 0;
  int shuffled_keys = 0;
  double memory = 0.0;
  double keystroke_s = 0.0;
  double decision_s = 0.0;
  double probability = 0.0;
  double time_s = 0.0;
  double cps = 0.0;
  double wpm = 0.0;

  // Recomputes probability and time from the stored parameters.
  bool consistent() const;
};

TradeoffPoint make_tradeoff_point(int length, int shuffled_keys, const TimingParams& timing);

// Cartesian product of the inputs, sorted by (length, shuffled_keys, memory).
// timing.memory is ignored; `memories` supplies the values.
std::vector<TradeoffPoint> tradeoff_table(const std::vector<int>& lengths,
                                          const std::vector<int>& shuffled_keys,
                                          const std::vector<double>& memories,
                                          const TimingParams& timing);

// Assumptions under which every table is valid; attached to exports.
const std::vector<std::string>& model_assumptions();

std::string tradeoff_csv(const std::vector<TradeoffPoint>& table);
nlohmann::json tradeoff_json(const std::vector<TradeoffPoint>& table);

}  // namespace keyreconf
