#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "keyreconf/app_profiles.hpp"
#include "keyreconf/mapping.hpp"
#include "keyreconf/render.hpp"
#include "keyreconf/shuffle.hpp"

namespace keyreconf {

inline constexpr const char* kSessionSchema = "keyreconf-session";
inline constexpr int kSessionSchemaVersion = 1;

struct LogRecord {
  enum class Kind { Event, Action, Render, Meta };

  Kind kind = Kind::Meta;
  std::int64_t t_ms = 0;
  KeyEvent event;                      // Event
  Action action;                       // Action
  std::vector<KeyId> keys;             // Action
  std::uint64_t version = 0;           // Render
  std::string digest;                  // Render: hash of the render JSON
  std::string meta_kind;               // Meta: session, warning, tick, malformed, app
  std::string text;                    // Meta
  std::optional<RenderState> render;   // Render; not serialised

  nlohmann::json to_json() const;
  static LogRecord from_json(const nlohmann::json& doc);
  // One JSONL line, without the newline.
  std::string line() const;
};

// FNV-1a 64 as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

struct SessionOptions {
  std::string profile;
  std::string layout = "ansi104";
  std::optional<ShuffleStrategy> strategy;  // secure_password only; region:6 when omitted
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
};

struct SessionHeader {
  std::string profile;
  std::string profile_hash;
  std::string layout;
  std::uint64_t seed = 0;
  std::optional<ShuffleStrategy> strategy;
  nlohmann::json shuffle;  // null unless shuffled
  nlohmann::json config = nlohmann::json::object();
  std::string started_at;  // wall clock, informational

  nlohmann::json to_json() const;
  static SessionHeader from_json(const nlohmann::json& doc);
  SessionOptions options() const;
};

struct SessionLog {
  SessionHeader header;
  std::vector<LogRecord> records;
  bool truncated = false;  // a partial trailing line was dropped on load

  std::string to_jsonl() const;
};

SessionLog parse_session_log(std::istream& in);
SessionLog load_session_log(const std::filesystem::path& path);

// Appends to a file, flushing after every line.
class LogWriter {
 public:
  LogWriter(const std::filesystem::path& path, const SessionHeader& header);
  void write(const LogRecord& record);

 private:
  std::ofstream out_;
};

// One live or replayed session. Not thread-safe; the owner serialises
// events and ticks.
class Session {
 public:
  using Sink = std::function<void(const LogRecord&)>;

  Session(std::string id, const SessionOptions& options);

  const std::string& id() const { return id_; }
  const SessionHeader& header() const { return log_.header; }
  const MappingProfile& profile() const { return profile_; }
  const std::optional<ShuffledLayout>& shuffled() const { return shuffled_; }
  const EngineState& state() const { return state_; }
  const SessionLog& log() const { return log_; }
  const RenderState& current_render() const { return current_render_; }
  // Text typed so far (EmitText, with backspace commands applied).
  const std::string& transcript() const { return transcript_; }
  const std::optional<GameState>& game() const { return game_; }

  // Every new record also goes to the sink, in log order.
  void set_sink(Sink sink) { sink_ = std::move(sink); }
  // Writes the records logged so far, then every later one.
  void set_writer(std::shared_ptr<LogWriter> writer);

  // Rejected events (unknown key, time going backwards) are logged with a
  // warning and leave the state untouched; returns false for them.
  bool handle_event(const KeyEvent& event);
  // Raw client input that could not be parsed as an event.
  void handle_malformed(const std::string& raw, const std::string& why);
  // Emits whatever fell due by `now_ms`; logs a tick record when anything did.
  bool tick(std::int64_t now_ms);
  // Resolves pending chords and prompts, then closes the log.
  void finish();

  // Earliest pending deadline, including game timers.
  std::optional<std::int64_t> next_deadline() const;
  std::int64_t clock_ms() const { return state_.clock_ms; }

 private:
  void append(LogRecord record);
  void meta(std::int64_t t, std::string kind, std::string text);
  void absorb(StepResult&& step);
  void advance(std::int64_t now_ms);
  void apply_game(std::int64_t now_ms, const std::vector<Coordinate>& hits);

  std::string id_;
  MappingProfile profile_;
  std::optional<ShuffledLayout> shuffled_;
  EngineState state_;
  RenderState current_render_;
  std::optional<MoleGameCfg> game_cfg_;
  std::optional<GameState> game_;
  std::string transcript_;
  SessionLog log_;
  Sink sink_;
  std::shared_ptr<LogWriter> writer_;
  bool finished_ = false;
};

// Builds the profile a session would use (after any shuffle).
MappingProfile session_profile(const SessionOptions& options, std::optional<ShuffledLayout>* shuffled = nullptr);

// Feeds events until the source returns nullopt, then finishes the session.
using EventSource = std::function<std::optional<KeyEvent>()>;
const SessionLog& run_session(Session& session, const EventSource& source);

// Re-executes the log's events and ticks and compares every regenerated
// record with the recorded one. Throws ReplayError naming the first
// divergent record; returns the regenerated log.
SessionLog replay(const SessionLog& recorded);
SessionLog replay(const std::filesystem::path& path);

}  // namespace keyreconf
