#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "keyreconf/app_profiles.hpp"
#include "keyreconf/assets.hpp"
#include "keyreconf/errors.hpp"
#include "keyreconf/metrics.hpp"
#include "keyreconf/security_model.hpp"
#include "keyreconf/session.hpp"
#include "keyreconf/shuffle.hpp"
#include "keyreconf/simulation.hpp"

namespace py = pybind11;
using namespace keyreconf;
using nlohmann::json;

// Structured values cross the boundary as JSON text; the Python package
// decodes them.

namespace {

TimingParams timing(double kt, double dt, double alpha) {
  TimingParams t;
  t.keystroke_s = kt;
  t.decision_s = dt;
  t.memory = alpha;
  return t;
}

json attack_json(const AttackEstimate& a) {
  return {{"probability", a.probability}, {"ci_low", a.ci_low},   {"ci_high", a.ci_high},
          {"successes", a.successes},     {"trials", a.trials},   {"exact", a.exact}};
}

std::string replay_text(const std::string& jsonl) {
  std::istringstream in(jsonl);
  return replay(parse_session_log(in)).to_jsonl();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "keyreconf native core";

  py::register_exception<SpecError>(m, "SpecError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<EventError>(m, "EventError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  static py::exception<ReplayError> replay_error(m, "ReplayError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ReplayError& e) {
      py::object err = py::reinterpret_borrow<py::object>(replay_error.ptr())(e.what());
      err.attr("record_index") = e.record_index();
      PyErr_SetObject(replay_error.ptr(), err.ptr());
    }
  });

  m.def("guess_probability", &guess_probability, py::arg("k"), py::arg("n"));
  m.def("required_shuffle_size", &required_shuffle_size, py::arg("target"), py::arg("n"));
  m.def(
      "expected_entry_time",
      [](int n, int k, double alpha, double kt, double dt) { return expected_entry_time(n, k, timing(kt, dt, alpha)); },
      py::arg("n"), py::arg("k"), py::arg("alpha") = 1.0, py::arg("kt") = 0.5, py::arg("dt") = 0.24);
  m.def(
      "predicted_wpm",
      [](int n, int k, double alpha, double kt, double dt) {
        return predicted_entry_rate(n, k, timing(kt, dt, alpha)).wpm;
      },
      py::arg("n"), py::arg("k"), py::arg("alpha") = 1.0, py::arg("kt") = 0.5, py::arg("dt") = 0.24);
  m.def(
      "tradeoff",
      [](std::vector<int> ns, std::vector<int> ks, std::vector<double> alphas, double kt, double dt,
         const std::string& format) {
        const auto table = tradeoff_table(ns, ks, alphas, timing(kt, dt, 1.0));
        return format == "csv" ? tradeoff_csv(table) : tradeoff_json(table).dump();
      },
      py::arg("ns"), py::arg("ks"), py::arg("alphas"), py::arg("kt") = 0.5, py::arg("dt") = 0.24,
      py::arg("format") = "json");

  m.def(
      "shuffle",
      [](const std::string& strategy, std::uint64_t seed, const std::string& layout) {
        auto base = bundled_layout(layout);
        return shuffle(base, default_shuffle_group(*base), parse_strategy(strategy), Seed{seed}).to_json().dump();
      },
      py::arg("strategy") = "region:6", py::arg("seed") = 0, py::arg("layout") = "ansi104");
  m.def(
      "decode",
      [](const std::string& strategy, std::uint64_t seed, const std::vector<std::string>& presses,
         const std::string& layout) {
        auto base = bundled_layout(layout);
        const auto s = shuffle(base, default_shuffle_group(*base), parse_strategy(strategy), Seed{seed});
        std::string out;
        for (const auto& p : presses) out += decode_press(s, KeyId(p));
        return out;
      },
      py::arg("strategy"), py::arg("seed"), py::arg("presses"), py::arg("layout") = "ansi104");

  m.def(
      "simulate_entry",
      [](const std::string& password, const std::string& strategy, std::uint64_t seed, double alpha, double kt,
         double dt, bool deterministic, const std::string& layout) {
        auto base = bundled_layout(layout);
        const auto s = shuffle(base, default_shuffle_group(*base), parse_strategy(strategy), Seed{seed});
        SimulatedTypist typist;
        typist.timing = timing(kt, dt, alpha);
        typist.mode = deterministic ? SimulationMode::Deterministic : SimulationMode::Stochastic;
        const auto r = simulate_entry(typist, s, password, Seed{seed});
        json keys = json::array();
        for (const auto& k : r.keystrokes) keys.push_back({{"t_ms", k.t_ms}, {"key", k.key.code()}});
        return json{{"stimulus", r.stimulus},       {"response", r.response},
                    {"duration_s", r.duration_s},   {"mean_orbit_size", r.mean_orbit_size},
                    {"keystrokes", keys}}
            .dump();
      },
      py::arg("password"), py::arg("strategy") = "region:6", py::arg("seed") = 0, py::arg("alpha") = 1.0,
      py::arg("kt") = 0.5, py::arg("dt") = 0.24, py::arg("deterministic") = true, py::arg("layout") = "ansi104");
  m.def(
      "observer_attack",
      [](int alphabet, int n, std::uint64_t trials, std::uint64_t seed, bool exact, bool layout_persists) {
        Observer obs;
        obs.layout_persists = layout_persists;
        return attack_json(observer_attack(alphabet, n, trials, Seed{seed},
                                           exact ? AttackMode::Exact : AttackMode::MonteCarlo, obs))
            .dump();
      },
      py::arg("alphabet"), py::arg("n"), py::arg("trials") = 100000, py::arg("seed") = 0, py::arg("exact") = false,
      py::arg("layout_persists") = false);
  m.def(
      "run_campaign",
      [](const std::string& config) {
        const auto cfg = campaign_from_json(json::parse(config));
        return run_campaign(cfg, bundled_layout(cfg.layout)).to_json().dump();
      },
      py::arg("config"));

  m.def(
      "edit_distance", [](const std::string& a, const std::string& b) { return edit_distance(utf8_decode(a), utf8_decode(b)); },
      py::arg("a"), py::arg("b"));
  m.def("cer", &cer, py::arg("stimulus"), py::arg("response"));
  m.def("wpm", &wpm, py::arg("response"), py::arg("duration_s"));

  m.def("bundled_profile_names", &bundled_profile_names);
  m.def(
      "build_profile",
      [](const std::string& name, const std::string& config, const std::string& layout) {
        return profile_to_json(build_bundled_profile(name, bundled_layout(layout), json::parse(config))).dump();
      },
      py::arg("name"), py::arg("config") = "{}", py::arg("layout") = "ansi104");
  m.def(
      "validate_profile",
      [](const std::string& doc) {
        const auto profile =
            profile_from_json(json::parse(doc), [](const std::string& name) { return bundled_layout(name); });
        std::vector<std::string> out;
        for (const auto& d : validate_profile(profile)) out.push_back(d.location + ": " + d.message);
        return out;
      },
      py::arg("profile"));

  py::class_<Session>(m, "Session")
      .def(py::init([](const std::string& profile, std::uint64_t seed, const std::string& strategy,
                       const std::string& config, const std::string& layout) {
             SessionOptions o;
             o.profile = profile;
             o.seed = seed;
             o.layout = layout;
             if (!strategy.empty()) o.strategy = parse_strategy(strategy);
             o.config = json::parse(config);
             return std::make_unique<Session>("py", o);
           }),
           py::arg("profile"), py::arg("seed") = 0, py::arg("strategy") = "", py::arg("config") = "{}",
           py::arg("layout") = "ansi104")
      .def(
          "key",
          [](Session& s, std::int64_t t, const std::string& key, const std::string& edge) {
            return s.handle_event(event_from_json({{"t_ms", t}, {"key", key}, {"edge", edge}}));
          },
          py::arg("t_ms"), py::arg("key"), py::arg("edge") = "down")
      .def("tick", &Session::tick, py::arg("now_ms"))
      .def("finish", &Session::finish)
      .def("next_deadline", &Session::next_deadline)
      .def_property_readonly("transcript", &Session::transcript)
      .def_property_readonly("clock_ms", &Session::clock_ms)
      .def("render", [](const Session& s) { return render_to_json(s.current_render()).dump(); })
      .def("log", [](const Session& s) { return s.log().to_jsonl(); });

  m.def("replay", &replay_text, py::arg("jsonl"));
}
