#include "keyreconf/service.hpp"

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <cctype>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "keyreconf/app_profiles.hpp"
#include "keyreconf/errors.hpp"
#include "keyreconf/security_model.hpp"
#include "keyreconf/session.hpp"

namespace keyreconf {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

using Clock = std::chrono::steady_clock;

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i] == '+' ? ' ' : s[i];
    }
  }
  return out;
}

std::pair<std::string, std::map<std::string, std::string>> split_target(std::string_view target) {
  std::map<std::string, std::string> query;
  const auto q = target.find('?');
  std::string path(target.substr(0, q));
  if (q != std::string_view::npos) {
    std::string_view rest = target.substr(q + 1);
    while (!rest.empty()) {
      const auto amp = rest.find('&');
      std::string_view part = rest.substr(0, amp);
      const auto eq = part.find('=');
      if (eq == std::string_view::npos) {
        query[percent_decode(part)] = "";
      } else {
        query[percent_decode(part.substr(0, eq))] = percent_decode(part.substr(eq + 1));
      }
      if (amp == std::string_view::npos) break;
      rest = rest.substr(amp + 1);
    }
  }
  return {path, query};
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw ParameterError("bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

int parse_int(const std::map<std::string, std::string>& q, const std::string& key, int fallback) {
  auto it = q.find(key);
  if (it == q.end()) return fallback;
  std::size_t used = 0;
  const int v = std::stoi(it->second, &used);
  if (used != it->second.size()) throw ParameterError("bad integer for " + key);
  return v;
}

double parse_double(const std::map<std::string, std::string>& q, const std::string& key, double fallback) {
  auto it = q.find(key);
  if (it == q.end()) return fallback;
  const auto v = parse_doubles(it->second);
  if (v.size() != 1) throw ParameterError("bad number for " + key);
  return v.front();
}

std::string random_id() {
  static std::mutex mutex;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(mutex);
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << gen();
  return out.str();
}

std::uint64_t random_seed() {
  static std::mutex mutex;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(mutex);
  return gen();
}

std::string mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

nlohmann::json error_frame(const std::string& code, const std::string& detail) {
  return {{"type", "error"}, {"code", code}, {"detail", detail}};
}

nlohmann::json render_frame(const RenderState& r) {
  nlohmann::json j = render_to_json(r);
  j["type"] = "render_state";
  return j;
}

std::optional<nlohmann::json> frame_for(const LogRecord& r) {
  switch (r.kind) {
    case LogRecord::Kind::Action: {
      nlohmann::json j = action_to_json(r.action);
      j["type"] = "action";
      j["t_ms"] = r.t_ms;
      nlohmann::json keys = nlohmann::json::array();
      for (const KeyId& k : r.keys) keys.push_back(k.code());
      j["keys"] = std::move(keys);
      return j;
    }
    case LogRecord::Kind::Render:
      if (r.render) return render_frame(*r.render);
      return std::nullopt;
    case LogRecord::Kind::Meta:
      if (r.meta_kind == "warning") return error_frame("warning", r.text);
      return std::nullopt;
    case LogRecord::Kind::Event:
      return std::nullopt;
  }
  return std::nullopt;
}

struct SessionSlot {
  std::mutex mutex;
  std::unique_ptr<Session> session;
  bool attached = false;
  bool closed = false;
};

}  // namespace

nlohmann::json tradeoff_request(const std::map<std::string, std::string>& query, std::string* csv) {
  try {
    const int n = parse_int(query, "n", 8);
    const int k_min = parse_int(query, "k_min", 1);
    const int k_max = parse_int(query, "k_max", 10);
    if (n < 1 || k_min < 1 || k_max < k_min) throw ParameterError("need n >= 1 and 1 <= k_min <= k_max");
    if (k_max - k_min > 10000) throw ParameterError("k range too large");
    std::vector<int> ks;
    for (int k = k_min; k <= k_max; ++k) ks.push_back(k);
    auto it = query.find("alpha");
    const std::vector<double> alphas = it == query.end() ? std::vector<double>{0.0, 1.0} : parse_doubles(it->second);
    TimingParams timing;
    timing.keystroke_s = parse_double(query, "kt", timing.keystroke_s);
    timing.decision_s = parse_double(query, "dt", timing.decision_s);
    const auto table = tradeoff_table({n}, ks, alphas, timing);
    if (csv) *csv = tradeoff_csv(table);
    return tradeoff_json(table);
  } catch (const std::invalid_argument& e) {
    throw ParameterError(e.what());
  } catch (const std::out_of_range& e) {
    throw ParameterError(std::string("number out of range: ") + e.what());
  }
}

struct Service::Impl : std::enable_shared_from_this<Service::Impl> {
  explicit Impl(ServiceConfig c) : config(std::move(c)), acceptor(ioc) {}

  ServiceConfig config;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::vector<std::thread> threads;
  std::atomic<bool> stopping{false};
  std::mutex stop_mutex;
  std::condition_variable stopped_cv;
  bool stopped = false;

  mutable std::mutex registry_mutex;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions;

  std::size_t live_sessions() const {
    std::lock_guard lock(registry_mutex);
    std::size_t n = 0;
    for (const auto& [id, slot] : sessions) {
      std::lock_guard slot_lock(slot->mutex);
      n += slot->closed ? 0 : 1;
    }
    return n;
  }

  std::shared_ptr<SessionSlot> find(const std::string& id) {
    std::lock_guard lock(registry_mutex);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  void accept();
  http::response<http::string_body> handle(const http::request<http::string_body>& req);
  http::response<http::string_body> create_session(const http::request<http::string_body>& req);
};

namespace {

using Response = http::response<http::string_body>;

Response json_response(const http::request<http::string_body>& req, http::status status, const nlohmann::json& body) {
  Response res{status, req.version()};
  res.set(http::field::content_type, "application/json");
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = body.dump();
  res.prepare_payload();
  return res;
}

Response text_response(const http::request<http::string_body>& req, http::status status, std::string type,
                       std::string body) {
  Response res{status, req.version()};
  res.set(http::field::content_type, type);
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

Response error_response(const http::request<http::string_body>& req, http::status status, const std::string& code,
                        const std::string& detail) {
  return json_response(req, status, {{"error", code}, {"detail", detail}});
}

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, std::shared_ptr<SessionSlot> slot, std::int64_t grace_ms)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), slot_(std::move(slot)), grace_ms_(grace_ms) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return detach();
    anchor_wall_ = Clock::now();
    {
      std::lock_guard lock(slot_->mutex);
      anchor_t_ = slot_->session->clock_ms();
      // Frames are produced while the slot is locked and queued here; the
      // socket work happens on this connection's strand.
      std::weak_ptr<WsConnection> self = weak_from_this();
      slot_->session->set_sink([self](const LogRecord& r) {
        if (auto conn = self.lock()) {
          if (auto frame = frame_for(r)) conn->pending_.push_back(frame->dump());
        }
      });
      pending_.push_back(render_frame(slot_->session->current_render()).dump());
    }
    flush_pending();
    schedule_tick();
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return detach();
    const std::string raw = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    handle_frame(raw);
    flush_pending();
    schedule_tick();
    do_read();
  }

  void handle_frame(const std::string& raw) {
    std::lock_guard lock(slot_->mutex);
    Session& session = *slot_->session;
    if (slot_->closed) {
      pending_.push_back(error_frame("closed", "session is closed").dump());
      return;
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
      session.handle_malformed(raw, "invalid JSON");
      pending_.push_back(error_frame("malformed", e.what()).dump());
      return;
    }
    const std::string type = doc.is_object() ? doc.value("type", "") : "";
    if (type == "get_render") {
      pending_.push_back(render_frame(session.current_render()).dump());
      return;
    }
    if (type != "key_event") {
      session.handle_malformed(raw, "unknown frame type");
      pending_.push_back(error_frame("malformed", "expected a key_event frame").dump());
      return;
    }
    KeyEvent event;
    try {
      event = event_from_json(doc);
    } catch (const EventError& e) {
      session.handle_malformed(raw, "bad key_event");
      pending_.push_back(error_frame("malformed", e.what()).dump());
      return;
    }
    anchor_t_ = event.t_ms;
    anchor_wall_ = Clock::now();
    if (!session.handle_event(event)) {
      // The rejection warning already went out through the sink; name it
      // as a protocol error too.
      pending_.push_back(error_frame("bad_event", session.log().records.back().text).dump());
    }
  }

  // Client time is only known at events; between them it advances with the
  // wall clock from the last one.
  std::int64_t session_now() const {
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - anchor_wall_);
    return anchor_t_ + elapsed.count();
  }

  void schedule_tick() {
    std::optional<std::int64_t> due;
    {
      std::lock_guard lock(slot_->mutex);
      due = slot_->session->next_deadline();
    }
    timer_.cancel();
    if (!due) return;
    const std::int64_t wait = std::max<std::int64_t>(0, *due + grace_ms_ - session_now());
    timer_.expires_after(std::chrono::milliseconds(wait));
    timer_.async_wait(beast::bind_front_handler(&WsConnection::on_tick, shared_from_this()));
  }

  void on_tick(beast::error_code ec) {
    if (ec || detached_) return;
    {
      std::lock_guard lock(slot_->mutex);
      if (!slot_->closed) slot_->session->tick(session_now());
    }
    flush_pending();
    schedule_tick();
  }

  void flush_pending() {
    if (writing_ || pending_.empty() || detached_) return;
    writing_ = true;
    current_ = std::move(pending_.front());
    pending_.pop_front();
    ws_.text(true);
    ws_.async_write(net::buffer(current_), beast::bind_front_handler(&WsConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    writing_ = false;
    if (ec) return detach();
    flush_pending();
  }

  void detach() {
    if (detached_) return;
    detached_ = true;
    timer_.cancel();
    std::lock_guard lock(slot_->mutex);
    slot_->session->set_sink(nullptr);
    slot_->attached = false;
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  std::shared_ptr<SessionSlot> slot_;
  std::int64_t grace_ms_;
  beast::flat_buffer buffer_;
  std::deque<std::string> pending_;
  std::string current_;
  bool writing_ = false;
  bool detached_ = false;
  std::int64_t anchor_t_ = 0;
  Clock::time_point anchor_wall_;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, std::shared_ptr<Service::Impl> service)
      : stream_(std::move(socket)), service_(std::move(service)) {}

  void run() { do_read(); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return close();
    if (websocket::is_upgrade(req_)) return upgrade();
    auto res = std::make_shared<Response>(service_->handle(req_));
    response_ = res;
    http::async_write(stream_, *res, beast::bind_front_handler(&HttpConnection::on_write, shared_from_this()));
  }

  void upgrade() {
    const auto [path, query] = split_target(std::string(req_.target()));
    const std::string prefix = "/ws/sessions/";
    std::shared_ptr<SessionSlot> slot;
    std::string problem;
    http::status status = http::status::not_found;
    if (path.rfind(prefix, 0) == 0) slot = service_->find(path.substr(prefix.size()));
    if (!slot) {
      problem = "no such session";
    } else {
      std::lock_guard lock(slot->mutex);
      if (slot->attached) {
        problem = "session already has a live connection";
        status = http::status::conflict;
      } else {
        slot->attached = true;
      }
    }
    if (!problem.empty()) {
      auto res = std::make_shared<Response>(error_response(req_, status, "upgrade_refused", problem));
      res->keep_alive(false);
      response_ = res;
      http::async_write(stream_, *res, beast::bind_front_handler(&HttpConnection::on_write, shared_from_this()));
      return;
    }
    stream_.expires_never();
    std::make_shared<WsConnection>(stream_.release_socket(), slot, service_->config.tick_grace_ms)
        ->run(std::move(req_));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec || !response_->keep_alive()) return close();
    response_.reset();
    do_read();
  }

  void close() {
    beast::error_code ec;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::shared_ptr<Response> response_;
  std::shared_ptr<Service::Impl> service_;
};

}  // namespace

void Service::Impl::accept() {
  acceptor.async_accept(net::make_strand(ioc), [self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (self->stopping) return;
    if (!ec) std::make_shared<HttpConnection>(std::move(socket), self)->run();
    self->accept();
  });
}

Response Service::Impl::create_session(const http::request<http::string_body>& req) {
  nlohmann::json body;
  try {
    body = req.body().empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body());
  } catch (const nlohmann::json::parse_error& e) {
    return error_response(req, http::status::bad_request, "malformed", e.what());
  }
  if (!body.is_object() || !body.contains("profile") || !body["profile"].is_string()) {
    return error_response(req, http::status::bad_request, "malformed", "body needs a profile name");
  }
  SessionOptions options;
  options.profile = body["profile"].get<std::string>();
  options.layout = config.layout;
  if (!is_bundled_profile(options.profile)) {
    return error_response(req, http::status::not_found, "unknown_profile", options.profile);
  }
  if (live_sessions() >= config.max_sessions) {
    return error_response(req, http::status::service_unavailable, "busy",
                          "session limit of " + std::to_string(config.max_sessions) + " reached");
  }
  try {
    if (body.contains("strategy") && !body["strategy"].is_null()) {
      options.strategy = strategy_from_json(body["strategy"]);
    }
    options.seed = body.contains("seed") && !body["seed"].is_null() ? body["seed"].get<std::uint64_t>() : random_seed();
    if (body.contains("config") && body["config"].is_object()) options.config = body["config"];
  } catch (const std::exception& e) {
    return error_response(req, http::status::bad_request, "bad_parameter", e.what());
  }
  const std::string id = random_id();
  auto slot = std::make_shared<SessionSlot>();
  try {
    slot->session = std::make_unique<Session>(id, options);
  } catch (const std::exception& e) {
    return error_response(req, http::status::bad_request, "bad_parameter", e.what());
  }
  if (!config.log_dir.empty()) {
    slot->session->set_writer(
        std::make_shared<LogWriter>(config.log_dir / (id + ".jsonl"), slot->session->header()));
  }
  nlohmann::json out{{"id", id},
                     {"profile", options.profile},
                     {"seed", options.seed},
                     {"header", slot->session->header().to_json()},
                     {"render_state", render_to_json(slot->session->current_render())},
                     {"websocket", "/ws/sessions/" + id}};
  {
    std::lock_guard lock(registry_mutex);
    sessions.emplace(id, std::move(slot));
  }
  return json_response(req, http::status::created, out);
}

Response Service::Impl::handle(const http::request<http::string_body>& req) {
  const auto [path, query] = split_target(std::string(req.target()));
  const auto method = req.method();
  try {
    if (path == "/api/profiles" && method == http::verb::get) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& name : bundled_profile_names()) {
        list.push_back({{"name", name},
                        {"description", bundled_profile_description(name)},
                        {"shuffled", name == "secure_password"}});
      }
      return json_response(req, http::status::ok, {{"profiles", list}});
    }
    if (path == "/api/sessions" && method == http::verb::post) return create_session(req);
    if (path == "/api/tradeoff" && method == http::verb::get) {
      std::string csv;
      const auto doc = tradeoff_request(query, &csv);
      auto fmt = query.find("format");
      if (fmt != query.end() && fmt->second == "csv") return text_response(req, http::status::ok, "text/csv", csv);
      return json_response(req, http::status::ok, doc);
    }
    const std::string prefix = "/api/sessions/";
    if (path.rfind(prefix, 0) == 0) {
      std::string rest = path.substr(prefix.size());
      const bool wants_log = rest.size() > 4 && rest.substr(rest.size() - 4) == "/log";
      const std::string id = wants_log ? rest.substr(0, rest.size() - 4) : rest;
      auto slot = find(id);
      if (!slot) return error_response(req, http::status::not_found, "unknown_session", id);
      std::lock_guard lock(slot->mutex);
      if (wants_log && method == http::verb::get) {
        return text_response(req, http::status::ok, "application/x-ndjson", slot->session->log().to_jsonl());
      }
      if (!wants_log && method == http::verb::get) {
        return json_response(req, http::status::ok,
                             {{"id", id},
                              {"closed", slot->closed},
                              {"transcript", slot->session->transcript()},
                              {"header", slot->session->header().to_json()},
                              {"render_state", render_to_json(slot->session->current_render())}});
      }
      if (!wants_log && method == http::verb::delete_) {
        slot->session->set_sink(nullptr);
        slot->session->finish();
        slot->closed = true;
        return json_response(req, http::status::ok, {{"id", id}, {"closed", true}});
      }
      return error_response(req, http::status::method_not_allowed, "method", std::string(req.method_string()));
    }
    if (method == http::verb::get && !config.web_root.empty() && path.find("..") == std::string::npos) {
      std::filesystem::path file = config.web_root / (path == "/" ? "index.html" : path.substr(1));
      std::ifstream in(file, std::ios::binary);
      if (in && std::filesystem::is_regular_file(file)) {
        std::ostringstream body;
        body << in.rdbuf();
        return text_response(req, http::status::ok, mime_type(file), body.str());
      }
    }
    return error_response(req, http::status::not_found, "not_found", path);
  } catch (const ParameterError& e) {
    return error_response(req, http::status::bad_request, "bad_parameter", e.what());
  } catch (const std::exception& e) {
    return error_response(req, http::status::internal_server_error, "internal", e.what());
  }
}

Service::Service(ServiceConfig config) : impl_(std::make_shared<Impl>(std::move(config))) {}

Service::~Service() { stop(); }

void Service::start() {
  auto& impl = *impl_;
  const auto address = net::ip::make_address(impl.config.bind_address);
  const tcp::endpoint endpoint{address, impl.config.port};
  impl.acceptor.open(endpoint.protocol());
  impl.acceptor.set_option(net::socket_base::reuse_address(true));
  impl.acceptor.bind(endpoint);
  impl.acceptor.listen(net::socket_base::max_listen_connections);
  if (!impl.config.log_dir.empty()) std::filesystem::create_directories(impl.config.log_dir);
  impl.accept();
  const unsigned workers = std::max(2u, std::min(8u, std::thread::hardware_concurrency()));
  for (unsigned i = 0; i < workers; ++i) impl.threads.emplace_back([this] { impl_->ioc.run(); });
}

void Service::wait() {
  std::unique_lock lock(impl_->stop_mutex);
  impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

void Service::stop() {
  if (!impl_ || impl_->stopping.exchange(true)) return;
  beast::error_code ec;
  impl_->acceptor.close(ec);
  impl_->ioc.stop();
  for (auto& t : impl_->threads) {
    if (t.joinable()) t.join();
  }
  {
    std::lock_guard lock(impl_->stop_mutex);
    impl_->stopped = true;
  }
  impl_->stopped_cv.notify_all();
}

unsigned short Service::port() const { return impl_->acceptor.local_endpoint().port(); }

std::size_t Service::session_count() const { return impl_->live_sessions(); }

}  // namespace keyreconf
