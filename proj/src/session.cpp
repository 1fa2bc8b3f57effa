#include "keyreconf/session.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "keyreconf/assets.hpp"
#include "keyreconf/errors.hpp"
#include "keyreconf/metrics.hpp"

namespace keyreconf {
namespace {

std::string kind_name(LogRecord::Kind k) {
  switch (k) {
    case LogRecord::Kind::Event: return "event";
    case LogRecord::Kind::Action: return "action";
    case LogRecord::Kind::Render: return "render";
    case LogRecord::Kind::Meta: return "meta";
  }
  return "meta";
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

void pop_last_char(std::string& text) {
  std::u32string chars = utf8_decode(text);
  if (chars.empty()) return;
  chars.pop_back();
  text = utf8_encode(chars);
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

nlohmann::json LogRecord::to_json() const {
  nlohmann::json j{{"type", kind_name(kind)}, {"t_ms", t_ms}};
  switch (kind) {
    case Kind::Event:
      j["key"] = event.key.code();
      j["edge"] = to_string(event.edge);
      // Rejected out-of-order events keep the time the client sent.
      if (event.t_ms != t_ms) j["event_t_ms"] = event.t_ms;
      break;
    case Kind::Action: {
      j["action"] = action_to_json(action);
      nlohmann::json ks = nlohmann::json::array();
      for (const KeyId& k : keys) ks.push_back(k.code());
      j["keys"] = std::move(ks);
      break;
    }
    case Kind::Render:
      j["version"] = version;
      j["digest"] = digest;
      break;
    case Kind::Meta:
      j["kind"] = meta_kind;
      j["text"] = text;
      break;
  }
  return j;
}

LogRecord LogRecord::from_json(const nlohmann::json& doc) {
  LogRecord r;
  const std::string type = doc.at("type").get<std::string>();
  r.t_ms = doc.at("t_ms").get<std::int64_t>();
  if (type == "event") {
    r.kind = Kind::Event;
    r.event = event_from_json(doc);
    r.event.t_ms = doc.value("event_t_ms", r.t_ms);
  } else if (type == "action") {
    r.kind = Kind::Action;
    r.action = action_from_json(doc.at("action"));
    for (const auto& k : doc.value("keys", nlohmann::json::array())) r.keys.emplace_back(k.get<std::string>());
  } else if (type == "render") {
    r.kind = Kind::Render;
    r.version = doc.at("version").get<std::uint64_t>();
    r.digest = doc.at("digest").get<std::string>();
  } else if (type == "meta") {
    r.kind = Kind::Meta;
    r.meta_kind = doc.at("kind").get<std::string>();
    r.text = doc.value("text", "");
  } else {
    throw SpecError("unknown record type '" + type + "'");
  }
  return r;
}

std::string LogRecord::line() const { return to_json().dump(); }

nlohmann::json SessionHeader::to_json() const {
  return {{"schema", kSessionSchema},
          {"version", kSessionSchemaVersion},
          {"profile", profile},
          {"profile_hash", profile_hash},
          {"layout", layout},
          {"seed", seed},
          {"strategy", strategy ? nlohmann::json(strategy_name(*strategy)) : nlohmann::json()},
          {"shuffle", shuffle},
          {"config", config},
          {"started_at", started_at}};
}

SessionHeader SessionHeader::from_json(const nlohmann::json& doc) {
  if (doc.value("schema", "") != kSessionSchema) throw SpecError("not a session log");
  if (doc.value("version", 0) != kSessionSchemaVersion) throw SpecError("unsupported session log version");
  SessionHeader h;
  h.profile = doc.at("profile").get<std::string>();
  h.profile_hash = doc.at("profile_hash").get<std::string>();
  h.layout = doc.at("layout").get<std::string>();
  h.seed = doc.at("seed").get<std::uint64_t>();
  if (!doc.at("strategy").is_null()) h.strategy = parse_strategy(doc.at("strategy").get<std::string>());
  h.shuffle = doc.value("shuffle", nlohmann::json());
  h.config = doc.value("config", nlohmann::json::object());
  h.started_at = doc.value("started_at", "");
  return h;
}

SessionOptions SessionHeader::options() const {
  SessionOptions o;
  o.profile = profile;
  o.layout = layout;
  o.strategy = strategy;
  o.seed = seed;
  o.config = config;
  return o;
}

std::string SessionLog::to_jsonl() const {
  std::string out = header.to_json().dump() + "\n";
  for (const LogRecord& r : records) out += r.line() + "\n";
  return out;
}

SessionLog parse_session_log(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(std::move(line));
  }
  if (lines.empty()) throw SpecError("empty session log");
  SessionLog log;
  try {
    log.header = SessionHeader::from_json(nlohmann::json::parse(lines.front()));
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("bad session log header: ") + e.what());
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      log.records.push_back(LogRecord::from_json(nlohmann::json::parse(lines[i])));
    } catch (const std::exception& e) {
      // A crash can leave half a line at the end; anything earlier is corruption.
      if (i + 1 == lines.size()) {
        log.truncated = true;
        break;
      }
      throw SpecError("corrupt session log line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return log;
}

SessionLog load_session_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open " + path.string());
  return parse_session_log(in);
}

LogWriter::LogWriter(const std::filesystem::path& path, const SessionHeader& header) : out_(path) {
  if (!out_) throw SpecError("cannot write " + path.string());
  out_ << header.to_json().dump() << '\n' << std::flush;
}

void LogWriter::write(const LogRecord& record) { out_ << record.line() << '\n' << std::flush; }

MappingProfile session_profile(const SessionOptions& options, std::optional<ShuffledLayout>* shuffled) {
  auto layout = bundled_layout(options.layout);
  MappingProfile profile = build_bundled_profile(options.profile, layout, options.config);
  if (options.profile == "secure_password") {
    const ShuffleStrategy strategy = options.strategy.value_or(RegionShuffle{6});
    ShuffledLayout s = shuffle(layout, default_shuffle_group(*layout), strategy, Seed{options.seed});
    profile = apply_shuffle(profile, s);
    if (shuffled) *shuffled = std::move(s);
  } else if (options.strategy) {
    throw ParameterError("profile '" + options.profile + "' does not use a shuffle");
  }
  return profile;
}

Session::Session(std::string id, const SessionOptions& options) : id_(std::move(id)) {
  auto layout = bundled_layout(options.layout);
  const MappingProfile unshuffled = build_bundled_profile(options.profile, layout, options.config);
  profile_ = session_profile(options, &shuffled_);
  if (options.profile == "whack_a_mole") {
    MoleGameCfg cfg = default_mole_config(*layout, options.seed);
    cfg.spawn_interval_ms = options.config.value("spawn_interval_ms", cfg.spawn_interval_ms);
    cfg.mole_lifetime_ms = options.config.value("mole_lifetime_ms", cfg.mole_lifetime_ms);
    game_ = initial_game_state(cfg);
    game_cfg_ = std::move(cfg);
  }
  if (const auto diags = validate_profile(profile_); !diags.empty()) {
    throw ParameterError("profile '" + options.profile + "' is invalid: " + diags.front().location + ": " +
                         diags.front().message);
  }

  SessionHeader& h = log_.header;
  h.profile = options.profile;
  h.profile_hash = fnv1a_hex(profile_to_json(unshuffled).dump());
  h.layout = options.layout;
  h.seed = options.seed;
  if (shuffled_) {
    h.strategy = shuffled_->strategy();
    h.shuffle = shuffled_->to_json();
  }
  h.config = options.config.is_object() ? options.config : nlohmann::json::object();
  h.started_at = utc_now();

  state_ = initial_state(profile_);
  current_render_ = render(profile_, state_);
  meta(0, "session", "start " + options.profile);
}

void Session::set_writer(std::shared_ptr<LogWriter> writer) {
  writer_ = std::move(writer);
  if (writer_) {
    for (const LogRecord& r : log_.records) writer_->write(r);
  }
}

void Session::append(LogRecord record) {
  if (!log_.records.empty()) record.t_ms = std::max(record.t_ms, log_.records.back().t_ms);
  log_.records.push_back(std::move(record));
  const LogRecord& r = log_.records.back();
  if (writer_) writer_->write(r);
  if (sink_) sink_(r);
}

void Session::meta(std::int64_t t, std::string kind, std::string text) {
  LogRecord r;
  r.kind = LogRecord::Kind::Meta;
  r.t_ms = t;
  r.meta_kind = std::move(kind);
  r.text = std::move(text);
  append(std::move(r));
}

void Session::absorb(StepResult&& step) {
  for (TimedAction& a : step.actions) {
    if (const auto* text = std::get_if<EmitText>(&a.action)) {
      transcript_ += text->text;
    } else if (const auto* cmd = std::get_if<Command>(&a.action); cmd && cmd->name == "backspace") {
      pop_last_char(transcript_);
    }
    LogRecord r;
    r.kind = LogRecord::Kind::Action;
    r.t_ms = a.t_ms;
    r.action = std::move(a.action);
    r.keys = std::move(a.keys);
    append(std::move(r));
  }
  if (step.render) {
    current_render_ = std::move(*step.render);
    LogRecord r;
    r.kind = LogRecord::Kind::Render;
    r.t_ms = step.render_t_ms;
    r.version = current_render_.version;
    r.digest = fnv1a_hex(render_to_json(current_render_).dump());
    r.render = current_render_;
    append(std::move(r));
  }
  for (std::string& w : step.warnings) meta(state_.clock_ms, "warning", std::move(w));
}

void Session::apply_game(std::int64_t now_ms, const std::vector<Coordinate>& hits) {
  if (!game_) return;
  const std::int64_t now = std::max(now_ms, game_->clock);
  game_ = mole_tick(*game_, *game_cfg_, now, hits);
  std::map<Cell, KeyId> key_of;
  for (const auto& [k, c] : game_cfg_->grid.cell_of) key_of.emplace(c, k);
  StepResult step;
  for (Command& c : game_->events) {
    std::vector<KeyId> keys;
    if (c.args.size() >= 2) {
      auto it = key_of.find({std::stoi(c.args[0]), std::stoi(c.args[1])});
      if (it != key_of.end()) keys.push_back(it->second);
    }
    step.actions.push_back(TimedAction{now, std::move(c), std::move(keys)});
  }
  std::map<KeyId, std::string> highlights;
  for (const auto& [cell, expiry] : game_->active_moles) highlights[key_of.at(cell)] = "brown";
  if (highlights != state_.app_highlights) {
    state_.app_highlights = std::move(highlights);
    step.render = render(profile_, state_);
    step.render_t_ms = now;
  }
  absorb(std::move(step));
}

void Session::advance(std::int64_t now_ms) {
  absorb(resolve_chords(profile_, state_, now_ms));
  if (game_ && mole_next_deadline(*game_) <= now_ms) apply_game(now_ms, {});
}

bool Session::handle_event(const KeyEvent& event) {
  if (finished_) throw EventError("session " + id_ + " is closed");
  std::string problem;
  if (!profile_.layout->contains(event.key)) {
    problem = "key '" + event.key.code() + "' is not on layout " + profile_.layout->name();
  } else if (event.t_ms < state_.clock_ms) {
    problem = "event at " + std::to_string(event.t_ms) + " ms is earlier than session time " +
              std::to_string(state_.clock_ms) + " ms";
  }
  LogRecord r;
  r.kind = LogRecord::Kind::Event;
  r.t_ms = event.t_ms;
  r.event = event;
  if (!problem.empty()) {
    append(std::move(r));
    meta(event.t_ms, "warning", "rejected event: " + problem);
    return false;
  }
  advance(event.t_ms);
  append(std::move(r));
  StepResult step = apply_event(profile_, state_, event);
  std::vector<Coordinate> hits;
  for (const TimedAction& a : step.actions) {
    if (const auto* c = std::get_if<Coordinate>(&a.action)) hits.push_back(*c);
  }
  absorb(std::move(step));
  if (game_ && !hits.empty()) apply_game(event.t_ms, hits);
  return true;
}

void Session::handle_malformed(const std::string& raw, const std::string& why) {
  meta(state_.clock_ms, "malformed", why.empty() ? raw : why + ": " + raw);
}

bool Session::tick(std::int64_t now_ms) {
  if (finished_) return false;
  const auto due = next_deadline();
  if (!due || *due > now_ms) return false;
  advance(now_ms);
  meta(now_ms, "tick", "");
  return true;
}

void Session::finish() {
  if (finished_) return;
  if (auto due = keyreconf::next_deadline(profile_, state_)) tick(*due);
  meta(state_.clock_ms, "session", "end");
  finished_ = true;
}

std::optional<std::int64_t> Session::next_deadline() const {
  auto due = keyreconf::next_deadline(profile_, state_);
  if (game_) {
    const std::int64_t g = mole_next_deadline(*game_);
    due = due ? std::min(*due, g) : g;
  }
  return due;
}

const SessionLog& run_session(Session& session, const EventSource& source) {
  while (auto event = source()) session.handle_event(*event);
  session.finish();
  return session.log();
}

SessionLog replay(const SessionLog& recorded) {
  Session session("replay", recorded.header.options());
  if (session.header().profile_hash != recorded.header.profile_hash) {
    throw ReplayError(0, "profile '" + recorded.header.profile + "' no longer matches the logged hash");
  }
  if (session.header().shuffle != recorded.header.shuffle) {
    throw ReplayError(0, "shuffle reconstructed from the seed differs from the logged permutation");
  }
  for (const LogRecord& r : recorded.records) {
    if (r.kind == LogRecord::Kind::Event) {
      session.handle_event(r.event);
    } else if (r.kind == LogRecord::Kind::Meta) {
      if (r.meta_kind == "tick") session.tick(r.t_ms);
      else if (r.meta_kind == "malformed") session.handle_malformed(r.text, "");
      else if (r.meta_kind == "session" && r.text == "end") session.finish();
    }
  }
  const auto& got = session.log().records;
  const auto& want = recorded.records;
  const std::size_t n = std::max(got.size(), want.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= want.size()) {
      if (recorded.truncated) break;
      throw ReplayError(i + 1, "replay produced extra record " + std::to_string(i + 1) + ": " + got[i].line());
    }
    if (i >= got.size()) {
      throw ReplayError(i + 1, "replay ended before record " + std::to_string(i + 1) + ": " + want[i].line());
    }
    const std::string a = want[i].line();
    const std::string b = got[i].line();
    if (a != b) {
      throw ReplayError(i + 1, "record " + std::to_string(i + 1) + " diverges: logged " + a + ", replayed " + b);
    }
  }
  SessionLog out = session.log();
  out.header.started_at = recorded.header.started_at;
  return out;
}

SessionLog replay(const std::filesystem::path& path) { return replay(load_session_log(path)); }

}  // namespace keyreconf
