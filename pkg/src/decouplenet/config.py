"""Scenario files: strict JSON parsing and report serialization.

Scenario layout::

    {
      "a": [[...]], "f": [[...]],
      "schedule": [{"t_start": 0, "weights": [[...]]}, ...],
      "horizon_end": 50,                      # optional, default solver.t_end
      "x0": [...] | "random",                 # optional, default "random"
      "solver": {"dt": ..., "t_end": ..., "epsilon": ..., "gap_tol": ... | null,
                 "seed": ..., "decay_factor": ..., "blowup_cap": ..., "realify": ...,
                 "n_trials": ..., "cond_cap": ..., "hurwitz_margin": ...},
      "probe": {"bound_scales": [...], "n_samples": ...}
    }

Unknown keys are rejected. Every default that gets applied is recorded in
``ScenarioConfig.applied_defaults`` so reports can echo it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .consensus import (
    DEFAULT_BLOWUP,
    DEFAULT_DECAY,
    DEFAULT_DT,
    DEFAULT_EPSILON,
    DEFAULT_HURWITZ_MARGIN,
    DEFAULT_T_END,
    DEFAULT_TRIALS,
    AgentSystem,
)
from .decoupler import DEFAULT_COND_CAP
from .graph import TopologySchedule, WeightedDigraph

__all__ = ["ConfigError", "ScenarioConfig", "parse_config", "load_config", "to_jsonable", "dumps"]

SOLVER_DEFAULTS = {
    "dt": DEFAULT_DT,
    "t_end": DEFAULT_T_END,
    "epsilon": DEFAULT_EPSILON,
    "gap_tol": None,
    "seed": 0,
    "decay_factor": DEFAULT_DECAY,
    "blowup_cap": DEFAULT_BLOWUP,
    "realify": False,
    "n_trials": DEFAULT_TRIALS,
    "cond_cap": DEFAULT_COND_CAP,
    "hurwitz_margin": DEFAULT_HURWITZ_MARGIN,
}
PROBE_DEFAULTS = {"bound_scales": [0.0, 0.1, 1.0], "n_samples": 20}
TOP_KEYS = {"a", "f", "schedule", "horizon_end", "x0", "solver", "probe"}


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


def _reject_constant(name):
    raise ConfigError("<json>", f"non-standard constant {name}")


def _number(value, key, *, positive=False, nonneg=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {type(value).__name__}")
    if integer and not isinstance(value, int):
        raise ConfigError(key, "expected an integer")
    if not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    if positive and not value > 0:
        raise ConfigError(key, "must be positive")
    if nonneg and value < 0:
        raise ConfigError(key, "must be nonnegative")
    return value


def _matrix(value, key):
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ConfigError(key, "expected a non-empty nested row-major array")
    width = len(value[0])
    rows = []
    for i, r in enumerate(value):
        if len(r) != width:
            raise ConfigError(f"{key}[{i}]", "ragged row")
        rows.append([_number(v, f"{key}[{i}][{j}]") for j, v in enumerate(r)])
    return np.array(rows, dtype=float)


def _strict_keys(obj, allowed, key):
    if not isinstance(obj, dict):
        raise ConfigError(key, "expected an object")
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigError(f"{key}.{extra[0]}" if key else extra[0], "unknown key")


@dataclass(frozen=True)
class ScenarioConfig:
    system: AgentSystem
    x0: object
    solver: dict
    probe: dict
    applied_defaults: dict = field(default_factory=dict)

    def initial_state(self):
        if isinstance(self.x0, str):
            rng = np.random.default_rng(self.solver["seed"])
            return rng.standard_normal(self.system.n_agents * self.system.d)
        return np.asarray(self.x0, dtype=float)


def parse_config(data, overrides=None):
    """Validate a decoded scenario document; ``overrides`` replace solver fields."""
    _strict_keys(data, TOP_KEYS, "")
    for req in ("a", "f", "schedule"):
        if req not in data:
            raise ConfigError(req, "missing required key")
    applied = {}
    a = _matrix(data["a"], "a")
    f = _matrix(data["f"], "f")
    if a.shape[0] != a.shape[1]:
        raise ConfigError("a", f"must be square, got {a.shape}")
    if f.shape != a.shape:
        raise ConfigError("f", f"must match a's shape {a.shape}, got {f.shape}")

    solver_in = data.get("solver", {})
    _strict_keys(solver_in, SOLVER_DEFAULTS, "solver")
    solver = dict(solver_in)
    for k, v in (overrides or {}).items():
        if v is not None:
            solver[k] = v
    for k, v in SOLVER_DEFAULTS.items():
        if k not in solver:
            solver[k] = v
            applied[f"solver.{k}"] = "auto" if v is None else v
    for k in ("dt", "t_end", "epsilon", "decay_factor", "blowup_cap", "cond_cap"):
        _number(solver[k], f"solver.{k}", positive=True)
    _number(solver["hurwitz_margin"], "solver.hurwitz_margin", nonneg=True)
    _number(solver["seed"], "solver.seed", integer=True, nonneg=True)
    _number(solver["n_trials"], "solver.n_trials", integer=True, positive=True)
    if solver["gap_tol"] is not None:
        _number(solver["gap_tol"], "solver.gap_tol", positive=True)
    if not isinstance(solver["realify"], bool):
        raise ConfigError("solver.realify", "expected a boolean")
    if solver["t_end"] < solver["dt"]:
        raise ConfigError("solver.t_end", "must be at least dt")

    probe_in = data.get("probe", {})
    _strict_keys(probe_in, PROBE_DEFAULTS, "probe")
    probe = dict(probe_in)
    for k, v in PROBE_DEFAULTS.items():
        if k not in probe:
            probe[k] = list(v) if isinstance(v, list) else v
            applied[f"probe.{k}"] = v
    if not isinstance(probe["bound_scales"], list) or not probe["bound_scales"]:
        raise ConfigError("probe.bound_scales", "expected a non-empty array")
    for i, s in enumerate(probe["bound_scales"]):
        _number(s, f"probe.bound_scales[{i}]", nonneg=True)
    _number(probe["n_samples"], "probe.n_samples", integer=True, positive=True)

    sched_in = data["schedule"]
    if not isinstance(sched_in, list) or not sched_in:
        raise ConfigError("schedule", "expected a non-empty array of segments")
    segments = []
    for i, seg in enumerate(sched_in):
        key = f"schedule[{i}]"
        _strict_keys(seg, {"t_start", "weights"}, key)
        for req in ("t_start", "weights"):
            if req not in seg:
                raise ConfigError(f"{key}.{req}", "missing required key")
        t0 = _number(seg["t_start"], f"{key}.t_start", nonneg=True)
        w = _matrix(seg["weights"], f"{key}.weights")
        try:
            g = WeightedDigraph(w)
        except ValueError as exc:
            raise ConfigError(f"{key}.weights", str(exc)) from None
        segments.append((t0, g))
    if "horizon_end" in data:
        horizon = _number(data["horizon_end"], "horizon_end", positive=True)
    else:
        horizon = solver["t_end"]
        applied["horizon_end"] = horizon
    try:
        schedule = TopologySchedule(tuple(segments), horizon)
    except ValueError as exc:
        raise ConfigError("schedule", str(exc)) from None
    system = AgentSystem(a, f, schedule)

    x0 = data.get("x0", None)
    if x0 is None:
        x0 = "random"
        applied["x0"] = "random"
    if isinstance(x0, str):
        if x0 != "random":
            raise ConfigError("x0", "expected an array or \"random\"")
    else:
        if not isinstance(x0, list):
            raise ConfigError("x0", "expected an array or \"random\"")
        x0 = [_number(v, f"x0[{i}]") for i, v in enumerate(x0)]
        if len(x0) != system.n_agents * system.d:
            raise ConfigError("x0", f"expected length N*d = {system.n_agents * system.d}")
    return ScenarioConfig(system, x0, solver, probe, applied)


def load_config(path, overrides=None):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", f"malformed JSON: {exc}") from None
    return parse_config(data, overrides)


def to_jsonable(obj):
    """Convert numpy values and dataclass-ish containers to plain JSON data.

    Complex numbers become ``[re, im]``; non-finite floats become ``null``.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj):
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"
