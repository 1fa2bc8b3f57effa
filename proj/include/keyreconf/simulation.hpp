#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "keyreconf/layout.hpp"
#include "keyreconf/rng.hpp"
#include "keyreconf/security_model.hpp"
#include "keyreconf/shuffle.hpp"

namespace keyreconf {

// Order in which a typist inspects the candidate keys of an orbit.
enum class ScanPolicy { RowMajor, Random };

// Deterministic replaces every random draw with its expectation.
enum class SimulationMode { Deterministic, Stochastic };

// Optional typing-error hook: given the intended character, return the
// character actually typed. Unset by default (error-free typing).
using ConfusionModel = std::function<std::string(const std::string& intended, Rng& rng)>;

struct SimulatedTypist {
  TimingParams timing;
  ScanPolicy scan_policy = ScanPolicy::RowMajor;
  SimulationMode mode = SimulationMode::Stochastic;
  // Stop scanning at the target instead of scanning the whole orbit.
  // Off by default: a scan costs (orbit size) x DT, as in the timing model.
  bool stop_at_target = false;
  ConfusionModel confusion;
};

struct Keystroke {
  std::int64_t t_ms = 0;
  KeyId key;
};

struct TrialResult {
  std::string stimulus;
  std::string response;
  double duration_s = 0.0;
  std::vector<Keystroke> keystrokes;
  // Mean candidate-set size over the shuffled characters typed.
  double mean_orbit_size = 0.0;
};

// Types `password` on the shuffled layout. Per character: one keystroke
// (KT); the first shuffled character scans its orbit (size x DT); later
// ones rescan unless recalled, which happens with probability alpha.
// Throws InputError for characters not shown on any key.
TrialResult simulate_entry(const SimulatedTypist& typist, const ShuffledLayout& shuffled,
                           std::string_view password, Seed seed);

struct AttackEstimate {
  double probability = 0.0;
  double ci_low = 0.0;  // 95% Wilson interval; equal to probability when exact
  double ci_high = 0.0;
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  bool exact = false;
};

enum class AttackMode { Exact, MonteCarlo };

// Observer with perfect inference of pressed positions who knows the
// shuffling scheme and guesses uniformly among consistent passwords.
struct Observer {
  // When true the layout is fixed for the whole password, so repeated
  // characters reveal themselves. The closed-form model treats keystrokes
  // independently (false).
  bool layout_persists = false;
};

inline constexpr std::uint64_t kExactEnumerationLimit = 1'000'000;

// Password drawn uniformly over an alphabet of `alphabet_size` symbols,
// all shuffled together. Exact mode enumerates every password and needs
// alphabet_size^length <= kExactEnumerationLimit.
AttackEstimate observer_attack(int alphabet_size, int length, std::uint64_t trials, Seed seed,
                               AttackMode mode, Observer observer = {});

// Password drawn uniformly over the shuffle group; each character's
// candidate set is its orbit under `strategy` (so RowShuffle and
// RegionShuffle give per-key candidate sizes).
AttackEstimate observer_attack(const ShuffleStrategy& strategy, const KeyboardLayout& layout,
                               const KeySet& group, int length, std::uint64_t trials, Seed seed,
                               AttackMode mode);

// Candidate-set sizes, one entry per group key.
std::vector<std::size_t> candidate_sizes(const ShuffleStrategy& strategy,
                                         const KeyboardLayout& layout, const KeySet& group);

struct CampaignConfig {
  std::vector<ShuffleStrategy> strategies;
  SimulatedTypist typist;
  std::vector<std::string> passwords;
  std::vector<std::uint64_t> seeds;
  std::string layout = "ansi104";
  // Empty means the default shuffle group (letters and digits).
  std::vector<std::string> group;
};

CampaignConfig campaign_from_json(const nlohmann::json& doc);

struct CampaignRow {
  std::string strategy;
  std::uint64_t seed = 0;
  std::string password;
  std::size_t password_len = 0;
  double k_eff = 0.0;
  double duration_s = 0.0;
  double wpm = 0.0;
  double cer = 0.0;
};

struct StrategySummary {
  std::string strategy;
  std::size_t trials = 0;
  double mean_wpm = 0.0;
  double sd_wpm = 0.0;
  double mean_duration_s = 0.0;
  double sd_duration_s = 0.0;
  double mean_k_eff = 0.0;
};

struct CampaignReport {
  std::vector<CampaignRow> rows;
  std::vector<StrategySummary> summaries;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Every (strategy, seed, password) combination. Strategies run on
// parallel workers; rows are merged in input order so the report depends
// only on the config.
CampaignReport run_campaign(const CampaignConfig& config,
                            std::shared_ptr<const KeyboardLayout> layout);

}  // namespace keyreconf
