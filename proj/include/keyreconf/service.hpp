#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"

namespace keyreconf {

struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::size_t max_sessions = 64;
  std::string layout = "ansi104";
  // Directory for per-session JSONL logs; empty keeps logs in memory only.
  std::filesystem::path log_dir;
  // Static UI files; empty or missing disables static serving.
  std::filesystem::path web_root;
  // Extra wait after a chord or prompt deadline before the service resolves
  // it on its own, so a slightly late client event can still arrive first.
  std::int64_t tick_grace_ms = 100;
};

// The HTTP/WebSocket front end.
//
//   GET  /api/profiles
//   POST /api/sessions            {profile, strategy?, seed?, config?}
//   GET  /api/sessions/{id}/log   JSONL
//   GET  /api/tradeoff?n=&k_min=&k_max=&alpha=&kt=&dt=&format=json|csv
//   WS   /ws/sessions/{id}        key_event in; render_state, action, error out
//   GET  /*                       files under web_root
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and starts accepting on a background thread.
  void start();
  // Blocks until stop() is called from elsewhere.
  void wait();
  void stop();
  unsigned short port() const;
  std::size_t session_count() const;

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

// JSON body of GET /api/tradeoff for the given query parameters; throws
// ParameterError for bad input.
nlohmann::json tradeoff_request(const std::map<std::string, std::string>& query, std::string* csv = nullptr);

}  // namespace keyreconf
