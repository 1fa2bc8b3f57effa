#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "keyreconf/app_profiles.hpp"
#include "keyreconf/assets.hpp"
#include "keyreconf/errors.hpp"
#include "keyreconf/security_model.hpp"
#include "keyreconf/session.hpp"
#include "keyreconf/shuffle.hpp"
#include "keyreconf/simulation.hpp"
#ifdef KEYRECONF_WITH_SERVICE
#include "keyreconf/service.hpp"
#endif

using namespace keyreconf;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw SpecError("cannot write " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int analyze(int n, int k_min, int k_max, const std::vector<double>& alphas, double kt, double dt,
            const std::string& format, const std::string& out) {
  if (k_min > k_max) throw ParameterError("--k-min must not exceed --k-max");
  std::vector<int> ks;
  for (int k = k_min; k <= k_max; ++k) ks.push_back(k);
  TimingParams timing;
  timing.keystroke_s = kt;
  timing.decision_s = dt;
  const auto table = tradeoff_table({n}, ks, alphas, timing);
  write_output(out, format == "json" ? tradeoff_json(table).dump(2) + "\n" : tradeoff_csv(table));
  return kOk;
}

int simulate(const std::string& config_path, const std::string& format, const std::string& out) {
  const auto doc = nlohmann::json::parse(read_file(config_path));
  const CampaignConfig config = campaign_from_json(doc);
  const auto report = run_campaign(config, bundled_layout(config.layout));
  write_output(out, format == "csv" ? report.to_csv() : report.to_json().dump(2) + "\n");
  return kOk;
}

int shuffle_demo(const std::string& strategy, std::uint64_t seed, const std::string& layout_name) {
  auto layout = bundled_layout(layout_name);
  const auto shuffled = shuffle(layout, default_shuffle_group(*layout), parse_strategy(strategy), Seed{seed});
  std::cout << "# " << layout->name() << " " << strategy_name(shuffled.strategy()) << " seed " << seed << "\n";
  for (int row = 0; row < layout->row_count(); ++row) {
    std::string line;
    bool any = false;
    for (const KeyId& k : layout->row_keys(row)) {
      if (!shuffled.group().contains(k)) continue;
      line += decode_press(shuffled, k) + " ";
      any = true;
    }
    if (any) std::cout << line.substr(0, line.size() - 1) << "\n";
  }
  std::cout << "# physical -> legend\n";
  for (const KeyId& k : layout->ordered(shuffled.group())) {
    std::cout << k.code() << " " << decode_press(shuffled, k) << "\n";
  }
  return kOk;
}

int replay_cmd(const std::string& path) {
  try {
    const SessionLog recorded = load_session_log(path);
    const SessionLog again = replay(recorded);
    std::cout << "replay ok: " << recorded.records.size() << " records, profile " << recorded.header.profile
              << (recorded.truncated ? " (truncated trailing line dropped)" : "") << "\n";
    return kOk;
  } catch (const ReplayError& e) {
    std::cerr << "replay diverged at record " << e.record_index() << ": " << e.what() << "\n";
    return kFailed;
  }
}

int validate_cmd(const std::string& target) {
  MappingProfile profile;
  if (is_bundled_profile(target)) {
    profile = build_bundled_profile(target, bundled_layout("ansi104"));
  } else {
    profile = profile_from_json(nlohmann::json::parse(read_file(target)),
                                [](const std::string& name) { return bundled_layout(name); });
  }
  const auto diags = validate_profile(profile);
  for (const auto& d : diags) std::cout << d.location << ": " << d.message << "\n";
  if (!diags.empty()) {
    std::cout << profile.name << ": " << diags.size() << " problem(s)\n";
    return kFailed;
  }
  std::cout << profile.name << ": ok\n";
  return kOk;
}

int export_profile(const std::string& name, const std::string& layout, const std::string& out) {
  write_output(out, profile_to_json(build_bundled_profile(name, bundled_layout(layout))).dump(1) + "\n");
  return kOk;
}

// Script lines: key events {"t_ms","key","edge"}, {"tick": t} or anything
// else, which is fed in as malformed client input.
int run_cmd(const std::string& profile, const std::string& script, const std::string& strategy,
            std::uint64_t seed, const std::string& config, const std::string& layout, const std::string& out) {
  SessionOptions options;
  options.profile = profile;
  options.layout = layout;
  options.seed = seed;
  if (!strategy.empty()) options.strategy = parse_strategy(strategy);
  if (!config.empty()) options.config = nlohmann::json::parse(config);
  Session session("cli", options);
  std::ifstream in(script);
  if (!in) throw SpecError("cannot open " + script);
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      session.handle_malformed(line, "invalid JSON");
      continue;
    }
    if (doc.is_object() && doc.contains("tick")) {
      session.tick(doc["tick"].get<std::int64_t>());
      continue;
    }
    try {
      session.handle_event(event_from_json(doc));
    } catch (const EventError& e) {
      session.handle_malformed(line, "bad key_event");
    }
  }
  session.finish();
  write_output(out, session.log().to_jsonl());
  std::cerr << "transcript: " << session.transcript() << "\n";
  return kOk;
}

#ifdef KEYRECONF_WITH_SERVICE
Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) std::thread([] { g_service->stop(); }).detach();
}

int serve(const std::string& bind, const std::string& layout, const std::string& log_dir, const std::string& web_root,
          std::size_t max_sessions) {
  ServiceConfig cfg;
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw ParameterError("--bind expects host:port");
  cfg.bind_address = bind.substr(0, colon);
  cfg.port = static_cast<unsigned short>(std::stoi(bind.substr(colon + 1)));
  cfg.layout = layout;
  cfg.log_dir = log_dir;
  cfg.web_root = web_root;
  cfg.max_sessions = max_sessions;
  bundled_layout(layout);
  Service service(cfg);
  service.start();
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on " << cfg.bind_address << ":" << service.port() << std::endl;
  service.wait();
  g_service = nullptr;
  return kOk;
}
#endif

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyboard reconfiguration engine"};
  app.require_subcommand(1);

  int n = 8, k_min = 1, k_max = 10;
  std::vector<double> alphas{0.0, 1.0};
  double kt = 0.5, dt = 0.24;
  std::string format = "csv", out;
  auto* analyze_cmd = app.add_subcommand("analyze", "Security/entry-time trade-off table");
  analyze_cmd->add_option("--n", n, "Password length")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--k-min", k_min, "Smallest number of shuffled keys")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--k-max", k_max, "Largest number of shuffled keys")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--alpha", alphas, "Memory values in [0,1]")->delimiter(',');
  analyze_cmd->add_option("--kt", kt, "Keystroke time KT, seconds");
  analyze_cmd->add_option("--dt", dt, "Decision time DT per key, seconds");
  analyze_cmd->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  analyze_cmd->add_option("-o,--out", out, "Output file (default stdout)");

  std::string config_path, sim_format = "json";
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a simulated typist campaign");
  simulate_cmd->add_option("config", config_path, "Campaign config JSON")->required();
  simulate_cmd->add_option("--format", sim_format)->check(CLI::IsMember({"csv", "json"}));
  simulate_cmd->add_option("-o,--out", out, "Output file (default stdout)");

  std::string strategy = "region:6", layout = "ansi104";
  std::uint64_t seed = 42;
  auto* demo_cmd = app.add_subcommand("shuffle-demo", "Print a shuffled legend table");
  demo_cmd->add_option("--strategy", strategy, "region[:k], row or full");
  demo_cmd->add_option("--seed", seed);
  demo_cmd->add_option("--layout", layout);

  std::string log_path;
  auto* replay_sub = app.add_subcommand("replay", "Re-execute a session log and compare");
  replay_sub->add_option("log", log_path, "Session log (JSONL)")->required();

  std::string bind = "127.0.0.1:8080", log_dir, web_root;
  std::size_t max_sessions = 64;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/WebSocket service");
  serve_cmd->add_option("--bind", bind, "host:port");
  serve_cmd->add_option("--layout", layout);
  serve_cmd->add_option("--log-dir", log_dir, "Write session logs here");
  serve_cmd->add_option("--web-root", web_root, "Serve static UI files from here");
  serve_cmd->add_option("--max-sessions", max_sessions);

  std::string profile_target;
  auto* validate_sub = app.add_subcommand("validate", "Check a profile document or bundled profile name");
  validate_sub->add_option("profile", profile_target, "Profile JSON path or bundled name")->required();

  std::string export_name;
  auto* export_sub = app.add_subcommand("export-profile", "Write a bundled profile as JSON");
  export_sub->add_option("name", export_name)->required();
  export_sub->add_option("--layout", layout);
  export_sub->add_option("-o,--out", out);

  std::string run_profile, script, run_strategy, run_config;
  std::uint64_t run_seed = 0;
  auto* run_sub = app.add_subcommand("run", "Drive a session from an event script and write its log");
  run_sub->add_option("profile", run_profile)->required();
  run_sub->add_option("script", script, "JSONL key events and {\"tick\": t} lines")->required();
  run_sub->add_option("--strategy", run_strategy);
  run_sub->add_option("--seed", run_seed);
  run_sub->add_option("--config", run_config, "Profile config JSON");
  run_sub->add_option("--layout", layout);
  run_sub->add_option("-o,--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*analyze_cmd) return analyze(n, k_min, k_max, alphas, kt, dt, format, out);
    if (*simulate_cmd) return simulate(config_path, sim_format, out);
    if (*demo_cmd) return shuffle_demo(strategy, seed, layout);
    if (*replay_sub) return replay_cmd(log_path);
    if (*validate_sub) return validate_cmd(profile_target);
    if (*export_sub) return export_profile(export_name, layout, out);
    if (*run_sub) return run_cmd(run_profile, script, run_strategy, run_seed, run_config, layout, out);
    if (*serve_cmd) {
#ifdef KEYRECONF_WITH_SERVICE
      return serve(bind, layout, log_dir, web_root, max_sessions);
#else
      std::cerr << "built without the service\n";
      return kFailed;
#endif
    }
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}
