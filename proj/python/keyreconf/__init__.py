"""Python bindings for the keyreconf engine."""

import json

from . import _core
from ._core import (
    EventError,
    InputError,
    ParameterError,
    ReplayError,
    SpecError,
    bundled_profile_names,
    cer,
    edit_distance,
    expected_entry_time,
    guess_probability,
    predicted_wpm,
    required_shuffle_size,
    wpm,
)

__all__ = [
    "EventError", "InputError", "ParameterError", "ReplayError", "SpecError",
    "Session", "build_profile", "bundled_profile_names", "cer", "decode",
    "edit_distance", "expected_entry_time", "guess_probability", "observer_attack",
    "predicted_wpm", "replay", "required_shuffle_size", "run_campaign", "shuffle",
    "simulate_entry", "tradeoff", "tradeoff_csv", "validate_profile", "wpm",
]


def tradeoff(ns, ks, alphas=(0.0, 1.0), kt=0.5, dt=0.24):
    return json.loads(_core.tradeoff(list(ns), list(ks), list(alphas), kt, dt, "json"))


def tradeoff_csv(ns, ks, alphas=(0.0, 1.0), kt=0.5, dt=0.24):
    return _core.tradeoff(list(ns), list(ks), list(alphas), kt, dt, "csv")


def shuffle(strategy="region:6", seed=0, layout="ansi104"):
    return json.loads(_core.shuffle(strategy, seed, layout))


def decode(strategy, seed, presses, layout="ansi104"):
    return _core.decode(strategy, seed, list(presses), layout)


def simulate_entry(password, strategy="region:6", seed=0, alpha=1.0, kt=0.5, dt=0.24,
                   deterministic=True, layout="ansi104"):
    return json.loads(_core.simulate_entry(password, strategy, seed, alpha, kt, dt, deterministic, layout))


def observer_attack(alphabet, n, trials=100000, seed=0, exact=False, layout_persists=False):
    return json.loads(_core.observer_attack(alphabet, n, trials, seed, exact, layout_persists))


def run_campaign(config):
    return json.loads(_core.run_campaign(json.dumps(config)))


def build_profile(name, config=None, layout="ansi104"):
    return json.loads(_core.build_profile(name, json.dumps(config or {}), layout))


def validate_profile(profile):
    if not isinstance(profile, str):
        profile = json.dumps(profile)
    return _core.validate_profile(profile)


def replay(jsonl):
    """Re-executes a session log; raises ReplayError (with .record_index) on divergence."""
    return _core.replay(jsonl)


class Session:
    def __init__(self, profile, seed=0, strategy="", config=None, layout="ansi104"):
        self._s = _core.Session(profile, seed, strategy, json.dumps(config or {}), layout)

    def key(self, t_ms, key, edge="down"):
        return self._s.key(t_ms, key, edge)

    def tap(self, t_ms, key, hold_ms=20):
        self._s.key(t_ms, key, "down")
        return self._s.key(t_ms + hold_ms, key, "up")

    def tick(self, now_ms):
        return self._s.tick(now_ms)

    def finish(self):
        self._s.finish()

    def next_deadline(self):
        return self._s.next_deadline()

    @property
    def transcript(self):
        return self._s.transcript

    def render(self):
        return json.loads(self._s.render())

    def log(self):
        return self._s.log()

    def records(self):
        return [json.loads(line) for line in self._s.log().splitlines()]
