"""Flat ``section.key = value`` configuration files.

Grammar, one setting per line::

    # comment
    section.key = value   # trailing comment

Values are JSON literals (``1.6``, ``true``, ``[0.45, 1.5, -0.3]``,
``"quoted text"``) or a bare word, which is read as a string. Blank lines
and ``#`` comments are ignored; a key may appear only once per file.

Precedence is command line (``--set`` and dedicated flags) over file over
built-in defaults. See ``KEYS`` for every recognised key.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .controller import ControllerParams, is_stable
from .errors import InvalidConfig, InvariantViolation, TypeMismatch, UnknownKey
from .estimator import DEFAULT_PRIOR, GaussianBelief
from .monitor import TriggerRule
from .simulator import LeadConfig, SimConfig

_D = SimConfig()

# key -> (kind, default). Order here is the canonical dump order.
KEYS = {
    "sim.dt": ("float", _D.dt),
    "sim.duration": ("float", _D.duration),
    "sim.n_followers": ("int", _D.n_followers),
    "sim.rng_seed": ("int", _D.rng_seed),
    "sim.initial_condition": ("str", _D.initial_condition),
    "sim.initial_states": ("states", None),
    "controller.tau_star": ("float", _D.controller.tau_star),
    "controller.s0": ("float", _D.controller.s0),
    "controller.T": ("float", _D.controller.T),
    "controller.K": ("float", _D.controller.K),
    "controller.k": ("vec3", list(_D.controller.k)),
    "controller.kf": ("float", _D.controller.kf),
    "controller.theta": ("float", _D.controller.theta),
    "controller.u_min": ("float", _D.controller.u_min),
    "controller.u_max": ("float", _D.controller.u_max),
    # prior_mean defaults to [1.0, controller.tau_star]
    "estimator.prior_mean": ("vec2", None),
    "estimator.prior_cov": ("mat2", DEFAULT_PRIOR.cov.tolist()),
    "estimator.noise_var": ("float", _D.noise_var),
    "estimator.window_len": ("int", _D.window_len),
    "estimator.recenter_prior": ("bool", _D.recenter_prior),
    "sensor.noise_var": ("float", _D.sensor_noise_var),
    "chart.sigma_desired": ("float", _D.chart_sigma),
    "chart.L": ("float", _D.chart_L),
    "trigger.k_violations": ("int", _D.trigger.k_violations),
    "trigger.window": ("float", _D.trigger.window),
    "trigger.retune_target": ("float", _D.retune_target),
    "trigger.max_retunes": ("int", _D.max_retunes),
    "trigger.scope": ("str", _D.retune_scope),
    "trigger.holdoff": ("float", _D.retune_holdoff),
    "lead.profile": ("str", _D.lead.profile),
    "lead.v0": ("float?", None),
    "lead.x0": ("float?", None),
    "lead.v_low": ("float", _D.lead.v_low),
    "lead.v_high": ("float", _D.lead.v_high),
    "lead.a_mag": ("float", _D.lead.a_mag),
    "lead.n_cycles": ("int", _D.lead.n_cycles),
}


def _strip_comment(line: str) -> str:
    quoted = False
    for i, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


def parse_value(text: str):
    text = text.strip()
    if text == "":
        raise TypeMismatch("empty value")
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_text(text: str, source: str = "<config>") -> dict:
    """Raw ``key -> value`` mapping from config text (keys checked, values not)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise InvalidConfig(f"{source}:{lineno}: expected 'key = value'")
        if key not in KEYS:
            raise UnknownKey(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise InvalidConfig(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = parse_value(value)
    return values


def parse_overrides(overrides) -> dict:
    values = {}
    for item in overrides or ():
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep:
            raise InvalidConfig(f"override {item!r} is not KEY=VALUE")
        if key not in KEYS:
            raise UnknownKey(f"unknown key {key!r}")
        values[key] = parse_value(value)
    return values


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _coerce(key: str, value):
    kind = KEYS[key][0]
    bad = TypeMismatch(f"{key}: expected {kind}, got {value!r}")
    if kind == "float" or (kind == "float?" and value is not None):
        if not _is_num(value):
            raise bad
        return float(value)
    if kind == "float?":
        return None
    if kind == "int":
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int) or isinstance(value, bool):
            raise bad
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise bad
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise bad
        return value
    if kind in ("vec2", "vec3"):
        size = int(kind[-1])
        if value is None and KEYS[key][1] is None:
            return None
        if not (isinstance(value, list) and len(value) == size and all(map(_is_num, value))):
            raise bad
        return [float(x) for x in value]
    if kind == "mat2":
        if not (isinstance(value, list) and len(value) == 2
                and all(isinstance(r, list) and len(r) == 2 and all(map(_is_num, r))
                        for r in value)):
            raise bad
        return [[float(x) for x in r] for r in value]
    if kind == "states":
        if value is None:
            return None
        if not (isinstance(value, list)
                and all(isinstance(r, list) and len(r) in (2, 3) and all(map(_is_num, r))
                        for r in value)):
            raise bad
        return [[float(x) for x in r] for r in value]
    raise AssertionError(kind)


def resolve(values: dict) -> dict:
    """Full, type-checked value set: ``values`` over defaults."""
    merged = {key: default for key, (_, default) in KEYS.items()}
    merged.update(values)
    out = {key: _coerce(key, val) for key, val in merged.items()}
    if out["estimator.prior_mean"] is None:
        out["estimator.prior_mean"] = [1.0, out["controller.tau_star"]]
    return out


def build(values: dict) -> SimConfig:
    """SimConfig from a resolved value set; any broken invariant -> InvariantViolation."""
    v = values
    if v["lead.profile"] != "synth" and (v["lead.v0"] is None or v["lead.x0"] is None):
        raise InvariantViolation("lead.v0 and lead.x0 are required with a CSV lead profile")
    try:
        controller = ControllerParams(
            tau_star=v["controller.tau_star"], s0=v["controller.s0"], T=v["controller.T"],
            K=v["controller.K"], k=tuple(v["controller.k"]), kf=v["controller.kf"],
            theta=v["controller.theta"], u_min=v["controller.u_min"],
            u_max=v["controller.u_max"])
        prior = GaussianBelief(v["estimator.prior_mean"], v["estimator.prior_cov"])
        states = v["sim.initial_states"]
        config = SimConfig(
            dt=v["sim.dt"], duration=v["sim.duration"], n_followers=v["sim.n_followers"],
            controller=controller, prior=prior,
            noise_var=v["estimator.noise_var"], sensor_noise_var=v["sensor.noise_var"],
            chart_sigma=v["chart.sigma_desired"], chart_L=v["chart.L"],
            trigger=TriggerRule(v["trigger.k_violations"], v["trigger.window"]),
            retune_target=v["trigger.retune_target"], max_retunes=v["trigger.max_retunes"],
            retune_scope=v["trigger.scope"], recenter_prior=v["estimator.recenter_prior"],
            retune_holdoff=v["trigger.holdoff"], window_len=v["estimator.window_len"],
            rng_seed=v["sim.rng_seed"],
            lead=LeadConfig(profile=v["lead.profile"], v0=v["lead.v0"], x0=v["lead.x0"],
                            v_low=v["lead.v_low"], v_high=v["lead.v_high"],
                            a_mag=v["lead.a_mag"], n_cycles=v["lead.n_cycles"]),
            initial_condition=v["sim.initial_condition"],
            initial_states=tuple(tuple(r) for r in states) if states is not None else None)
        config.chart  # validates sigma_desired and L
    except InvariantViolation:
        raise
    except (InvalidConfig, ValueError) as exc:
        raise InvariantViolation(str(exc)) from exc
    if not is_stable(controller):
        raise InvariantViolation(
            "closed-loop stability check failed: A + B k^T has an eigenvalue with "
            "non-negative real part")
    return config


def load_config(path=None, overrides=()) -> SimConfig:
    """Defaults, then the file at ``path`` (if any), then ``KEY=VALUE`` overrides.

    A relative ``lead.profile`` path in a file is resolved against the file's
    directory.
    """
    values = {}
    if path is not None:
        path = Path(path)
        values.update(parse_text(path.read_text(encoding="utf-8"), str(path)))
        prof = values.get("lead.profile")
        if isinstance(prof, str) and prof != "synth" and not Path(prof).is_absolute():
            values["lead.profile"] = str(path.parent / prof)
    values.update(parse_overrides(overrides))
    return build(resolve(values))


def config_values(config: SimConfig) -> dict:
    """Inverse of :func:`build`: the full value set describing ``config``."""
    c = config.controller
    lead = config.lead
    return {
        "sim.dt": config.dt,
        "sim.duration": config.duration,
        "sim.n_followers": config.n_followers,
        "sim.rng_seed": config.rng_seed,
        "sim.initial_condition": config.initial_condition,
        "sim.initial_states": ([list(r) for r in config.initial_states]
                               if config.initial_states is not None else None),
        "controller.tau_star": c.tau_star,
        "controller.s0": c.s0,
        "controller.T": c.T,
        "controller.K": c.K,
        "controller.k": list(c.k),
        "controller.kf": c.kf,
        "controller.theta": c.theta,
        "controller.u_min": c.u_min,
        "controller.u_max": c.u_max,
        "estimator.prior_mean": config.prior.mean.tolist(),
        "estimator.prior_cov": config.prior.cov.tolist(),
        "estimator.noise_var": config.noise_var,
        "estimator.window_len": config.window_len,
        "estimator.recenter_prior": config.recenter_prior,
        "sensor.noise_var": config.sensor_noise_var,
        "chart.sigma_desired": config.chart_sigma,
        "chart.L": config.chart_L,
        "trigger.k_violations": config.trigger.k_violations,
        "trigger.window": config.trigger.window,
        "trigger.retune_target": config.retune_target,
        "trigger.max_retunes": config.max_retunes,
        "trigger.scope": config.retune_scope,
        "trigger.holdoff": config.retune_holdoff,
        "lead.profile": lead.profile,
        "lead.v0": lead.v0,
        "lead.x0": lead.x0,
        "lead.v_low": lead.v_low,
        "lead.v_high": lead.v_high,
        "lead.a_mag": lead.a_mag,
        "lead.n_cycles": lead.n_cycles,
    }


def format_value(value) -> str:
    if isinstance(value, float) and math.isfinite(value):
        return repr(value)
    if isinstance(value, str) and value.replace("_", "").replace(".", "").isalnum():
        return value
    return json.dumps(value)


def dump_values(values: dict) -> str:
    """Canonical text: keys in ``KEYS`` order, one per line, ``None`` values omitted."""
    lines = [f"{key} = {format_value(values[key])}" for key in KEYS
             if key in values and values[key] is not None]
    return "\n".join(lines) + "\n"


def dump_config(config: SimConfig) -> str:
    return dump_values(config_values(config))


def canonical_text(text: str) -> str:
    """Normalise key order and value formatting of a config file's text."""
    return dump_values({k: _coerce(k, v) for k, v in parse_text(text).items()})
