#include "keyreconf/action.hpp"

#include <sstream>

#include "keyreconf/errors.hpp"

namespace keyreconf {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string action_kind(const Action& action) {
  return std::visit(Overloaded{
                        [](const Noop&) { return std::string("noop"); },
                        [](const EmitText&) { return std::string("emit_text"); },
                        [](const Command&) { return std::string("command"); },
                        [](const Coordinate&) { return std::string("coordinate"); },
                        [](const SeekTo&) { return std::string("seek_to"); },
                        [](const SelectItem&) { return std::string("select_item"); },
                    },
                    action);
}

nlohmann::json action_to_json(const Action& action) {
  nlohmann::json payload = std::visit(
      Overloaded{
          [](const Noop&) { return nlohmann::json::object(); },
          [](const EmitText& a) { return nlohmann::json{{"text", a.text}}; },
          [](const Command& a) { return nlohmann::json{{"name", a.name}, {"args", a.args}}; },
          [](const Coordinate& a) { return nlohmann::json{{"u", a.u}, {"v", a.v}}; },
          [](const SeekTo& a) { return nlohmann::json{{"seconds", a.seconds}}; },
          [](const SelectItem& a) { return nlohmann::json{{"item", a.item}}; },
      },
      action);
  return {{"kind", action_kind(action)}, {"payload", std::move(payload)}};
}

Action action_from_json(const nlohmann::json& doc) {
  const std::string kind = doc.at("kind").get<std::string>();
  const nlohmann::json payload = doc.value("payload", nlohmann::json::object());
  if (kind == "noop") return Noop{};
  if (kind == "emit_text") return EmitText{payload.at("text").get<std::string>()};
  if (kind == "command") {
    return Command{payload.at("name").get<std::string>(),
                   payload.value("args", std::vector<std::string>{})};
  }
  if (kind == "coordinate") return Coordinate{payload.at("u").get<double>(), payload.at("v").get<double>()};
  if (kind == "seek_to") return SeekTo{payload.at("seconds").get<double>()};
  if (kind == "select_item") return SelectItem{payload.at("item").get<std::string>()};
  throw SpecError("unknown action kind '" + kind + "'");
}

std::string describe(const Action& action) {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const Noop&) { out << "noop"; },
                 [&](const EmitText& a) { out << "emit_text(" << a.text << ")"; },
                 [&](const Command& a) {
                   out << "command(" << a.name;
                   for (const auto& arg : a.args) out << ", " << arg;
                   out << ")";
                 },
                 [&](const Coordinate& a) { out << "coordinate(" << a.u << ", " << a.v << ")"; },
                 [&](const SeekTo& a) { out << "seek_to(" << a.seconds << ")"; },
                 [&](const SelectItem& a) { out << "select_item(" << a.item << ")"; },
             },
             action);
  return out.str();
}

}  // namespace keyreconf
