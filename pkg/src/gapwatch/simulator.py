"""Platoon simulation with on-line time-gap monitoring.

A leader follows a prescribed acceleration profile; ``n_followers`` vehicles
run the CTH feedback/feedforward controller behind it. Every step each
follower measures its spacing (with Gaussian sensor noise) and its own speed,
refreshes a windowed posterior over ``[s0, tau]``, charts the posterior mean
of ``tau`` and, when the trigger rule fires, switches to a new time-gap
setting.

Vehicles are numbered 1..n_followers from the front; the leader is vehicle 0
and never appears in the records.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from .controller import (ControllerParams, DelayLine, VehicleState, command_accel,
                         derive_error_state, step_glvd)
from .errors import CollisionDetected, EmptyStream, InvalidConfig
from .estimator import DEFAULT_PRIOR, GaussianBelief, WindowedEstimator
from .monitor import ChartSpec, ChartState, TriggerRule, should_trigger
from .trajectory import (LeadTrajectory, fit_to_grid, integrate_lead, load_accel_profile,
                         synth_oscillation_profile)

log = logging.getLogger(__name__)

MPH = 0.44704


@dataclass(frozen=True)
class LeadConfig:
    """Where the leader's acceleration comes from.

    ``profile`` is ``"synth"`` for the square-wave generator or a path to a
    ``t,a`` CSV. ``v0`` defaults to ``v_low`` for the synthetic profile and
    must be given explicitly for a CSV.
    """

    profile: str = "synth"
    v0: Optional[float] = None
    x0: Optional[float] = None
    v_low: float = 20 * MPH
    v_high: float = 80 * MPH
    a_mag: float = 3.2
    n_cycles: int = 15

    @property
    def initial_speed(self) -> float:
        return self.v_low if self.v0 is None else self.v0

    @property
    def initial_position(self) -> float:
        return 0.0 if self.x0 is None else self.x0

    def build_profile(self, dt: float):
        if self.profile == "synth":
            return synth_oscillation_profile(self.v_low, self.v_high, self.a_mag,
                                             self.n_cycles, dt)
        return load_accel_profile(self.profile, dt)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    duration: float = 250.0
    n_followers: int = 5
    controller: ControllerParams = field(default_factory=ControllerParams)
    prior: GaussianBelief = DEFAULT_PRIOR
    noise_var: float = 0.01
    sensor_noise_var: float = 0.01
    chart_sigma: float = 0.125
    chart_L: float = 2.0
    trigger: TriggerRule = field(default_factory=TriggerRule)
    retune_target: float = 1.0
    max_retunes: int = 1
    retune_scope: str = "vehicle"
    recenter_prior: bool = True
    retune_holdoff: float = 5.0
    window_len: int = 50
    rng_seed: int = 0
    lead: LeadConfig = field(default_factory=LeadConfig)
    initial_condition: str = "equilibrium"
    initial_states: Optional[tuple] = None

    def __post_init__(self):
        problems = []
        if not self.dt > 0:
            problems.append("dt > 0")
        if not self.duration >= self.dt:
            problems.append("duration >= dt")
        if self.n_followers < 1:
            problems.append("n_followers >= 1")
        if not self.noise_var > 0:
            problems.append("noise_var > 0")
        if not self.sensor_noise_var >= 0:
            problems.append("sensor_noise_var >= 0")
        if self.window_len < 1:
            problems.append("window_len >= 1")
        if not self.retune_target > 0:
            problems.append("retune_target > 0")
        if not self.retune_holdoff >= 0:
            problems.append("retune_holdoff >= 0")
        if self.max_retunes < 0:
            problems.append("max_retunes >= 0")
        if self.retune_scope not in ("vehicle", "platoon"):
            problems.append("retune_scope in {vehicle, platoon}")
        if self.initial_condition not in ("equilibrium", "explicit"):
            problems.append("initial_condition in {equilibrium, explicit}")
        if self.initial_condition == "explicit":
            states = self.initial_states or ()
            if len(states) != self.n_followers:
                problems.append("one explicit initial state per follower")
        if problems:
            raise InvalidConfig("invalid simulation config: " + "; ".join(problems))

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def chart(self) -> ChartSpec:
        return ChartSpec(self.controller.tau_star, self.chart_sigma, self.chart_L)

    def replace(self, **changes) -> "SimConfig":
        return replace(self, **changes)


class SimRecord(NamedTuple):
    t: float
    vehicle_id: int
    x: float
    v: float
    a: float
    u: float
    spacing_true: float
    spacing_measured: float
    tau_hat: float
    tau_var: float
    lcl: float
    ucl: float
    violation: bool
    active_tau_star: float
    # False while the estimation window is (re)filling; not written to CSV
    charted: bool = True


@dataclass
class SimResult:
    config: SimConfig
    lead: LeadTrajectory
    records: list
    events: list
    aborted: bool = False
    abort_reason: Optional[str] = None

    def summary(self) -> dict:
        if self.records:
            out = summarize(self.records, s0=self.config.controller.s0)
        else:
            out = {"vehicles": {}}
        out["aborted"] = self.aborted
        out["abort_reason"] = self.abort_reason
        return out


def vehicle_rng(seed: int, vehicle_id: int) -> np.random.Generator:
    """Independent PCG64 stream for one vehicle.

    Streams are keyed by ``(seed, vehicle_id)`` through ``SeedSequence``'s
    spawn key, so adding or removing vehicles leaves the other streams intact.
    """
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(int(seed), spawn_key=(int(vehicle_id),))))


def build_lead(config: SimConfig) -> LeadTrajectory:
    profile = fit_to_grid(config.lead.build_profile(config.dt), config.n_steps + 1)
    return integrate_lead(profile, config.lead.initial_speed, config.lead.initial_position)


def init_platoon(config: SimConfig) -> list:
    """Initial follower states, front to back."""
    if config.n_followers < 1:
        raise InvalidConfig("n_followers must be >= 1")
    if config.initial_condition == "explicit":
        states = []
        for row in config.initial_states:
            x, v, *rest = row
            a = rest[0] if rest else 0.0
            states.append(VehicleState(float(x), float(v), float(a), 0.0))
        return states

    v0 = config.lead.initial_speed
    gap = v0 * config.controller.tau_star + config.controller.s0
    x = config.lead.initial_position
    states = []
    for _ in range(config.n_followers):
        x = x - gap
        states.append(VehicleState(x, v0, 0.0, 0.0))
    return states


def run(config: SimConfig) -> SimResult:
    """Simulate the platoon and monitor every follower.

    Each step, for every follower: measure spacing and speed, refresh the
    windowed posterior, chart the posterior mean of tau and evaluate the
    trigger; then compute every command from the step-start states and
    advance all vehicles together. A retune decided at step k takes effect
    from step k+1. After a retune, measurements are ignored for
    ``retune_holdoff`` seconds and charting resumes once the window refills.

    Raises :class:`CollisionDetected` (carrying the partial result) if any
    follower reaches its leader.
    """
    dt = config.dt
    n = config.n_followers
    lead = build_lead(config)
    followers = init_platoon(config)

    params = [config.controller] * n
    estimators = [WindowedEstimator(config.prior, config.noise_var, config.window_len)
                  for _ in range(n)]
    charts = [ChartState(config.chart) for _ in range(n)]
    delays = [DelayLine.for_delay(config.controller.theta, dt) for _ in range(n)]
    rngs = [vehicle_rng(config.rng_seed, i + 1) for i in range(n)]
    noise_sd = math.sqrt(config.sensor_noise_var)
    holdoff_until = [None] * n
    to_retune = []

    records = []
    events = []
    result = SimResult(config, lead, records, events)

    for k in range(config.n_steps + 1):
        t = round(k * dt, 12)

        for j in to_retune:
            params[j] = params[j].with_tau(config.retune_target)
            charts[j].retune(config.retune_target)
            estimators[j].reset()
            if config.recenter_prior:
                estimators[j].prior = estimators[j].prior.with_tau_mean(config.retune_target)
            holdoff_until[j] = t + config.retune_holdoff
        to_retune = []

        lead_state = VehicleState(lead.x[k], lead.v[k], lead.a[k])
        leaders = [lead_state] + followers[:-1]

        monitored = []
        for i in range(n):
            f = followers[i]
            gap = leaders[i].x - f.x
            if not gap > 0:
                result.aborted = True
                result.abort_reason = f"collision: vehicle {i + 1} at t={t:.6g}"
                raise CollisionDetected(result.abort_reason, partial=result)
            measured = gap + rngs[i].normal(0.0, noise_sd) if noise_sd > 0 else gap
            if holdoff_until[i] is not None and t >= holdoff_until[i] - 1e-9:
                estimators[i].reset()
                holdoff_until[i] = None
            belief = estimators[i].update(measured, f.v)
            charted = estimators[i].full and holdoff_until[i] is None
            out = False
            if charted:
                out, ev = charts[i].observe(belief.tau, t, i + 1)
                if ev is not None:
                    events.append(_violation_entry(ev))
            monitored.append((gap, measured, belief, out, charted, charts[i].limits))

        for i in range(n):
            chart = charts[i]
            if (not chart.pending or chart.retunes >= config.max_retunes
                    or params[i].tau_star == config.retune_target or i in to_retune):
                continue
            if should_trigger(chart.pending, config.trigger, t):
                targets = list(range(n)) if config.retune_scope == "platoon" else [i]
                targets = [j for j in targets if j not in to_retune]
                events.append({
                    "t": t, "vehicle_id": i + 1, "kind": "trigger",
                    "value": monitored[i][2].tau,
                    "limits": _limits_dict(chart.limits),
                    "from_tau_star": params[i].tau_star,
                    "to_tau_star": config.retune_target,
                    "retuned": [j + 1 for j in targets],
                })
                log.info("t=%.1f vehicle %d: time gap %.3g -> %.3g", t, i + 1,
                         params[i].tau_star, config.retune_target)
                to_retune.extend(targets)

        next_states = []
        for i in range(n):
            f = followers[i]
            err = derive_error_state(leaders[i], f, params[i])
            u = command_accel(err, delays[i].push(leaders[i].a), params[i])
            gap, measured, belief, out, charted, limits = monitored[i]
            records.append(SimRecord(t, i + 1, f.x, f.v, f.a, u, gap, measured,
                                     belief.tau, belief.tau_var, limits.lcl, limits.ucl,
                                     out, params[i].tau_star, charted))
            next_states.append(step_glvd(f, u, dt, params[i]))
        followers = next_states

    return result


def _limits_dict(limits) -> dict:
    return {"lcl": limits.lcl, "cl": limits.cl, "ucl": limits.ucl}


def _violation_entry(ev) -> dict:
    return {"t": ev.t, "vehicle_id": ev.vehicle_id, "kind": "violation",
            "value": ev.value, "side": ev.side, "limits": _limits_dict(ev.limits)}


def columns(records) -> dict:
    """Column-wise numpy view of a record list."""
    if not records:
        return {name: np.array([]) for name in SimRecord._fields}
    arr = list(zip(*records))
    return {name: np.asarray(col) for name, col in zip(SimRecord._fields, arr)}


def vehicle_columns(records, vehicle_id: int) -> dict:
    return columns([r for r in records if r.vehicle_id == vehicle_id])


def spacing_error(cols: dict, s0: float) -> np.ndarray:
    """Deviation from the CTH desired spacing at the active setting."""
    return cols["spacing_true"] - (cols["active_tau_star"] * cols["v"] + s0)


def summarize(records, s0: Optional[float] = None) -> dict:
    """Per-vehicle aggregates of the charted time gap.

    Time-gap statistics use only charted rows (full estimation window); a
    vehicle with no charted rows falls back to all of its rows. Violations are
    counted as excursions, i.e. rising edges of the violation flag. A new
    regime starts whenever ``active_tau_star`` changes; ``trigger_times`` are
    the last rows before each change, where the switch was decided. With ``s0`` given, the largest spacing
    deviation from the CTH policy is included too.
    """
    if not records:
        raise EmptyStream("no records to summarize")
    by_vehicle = {}
    for r in records:
        by_vehicle.setdefault(r.vehicle_id, []).append(r)

    vehicles = {}
    for vid in sorted(by_vehicle):
        cols = columns(by_vehicle[vid])
        flags = cols["violation"].astype(bool)
        rising = flags & ~np.concatenate([[False], flags[:-1]])
        charted = cols["charted"].astype(bool)
        if not charted.any():
            charted = np.ones_like(charted)
        tau_hat = cols["tau_hat"]
        stars = cols["active_tau_star"]
        change = np.flatnonzero(stars[1:] != stars[:-1]) + 1

        regimes = []
        bounds = np.concatenate([[0], change, [stars.size]])
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            seg = tau_hat[lo:hi][charted[lo:hi]]
            regimes.append({
                "tau_star": float(stars[lo]),
                "t_start": float(cols["t"][lo]),
                "t_end": float(cols["t"][hi - 1]),
                "max_abs_deviation": float(np.max(np.abs(seg - stars[lo]))) if seg.size else None,
                "tau_hat_std": float(np.std(seg)) if seg.size else None,
            })
        shown = tau_hat[charted]
        entry = {
            "tau_hat_max": float(shown.max()),
            "tau_hat_min": float(shown.min()),
            "tau_hat_std": float(np.std(shown)),
            "violations": int(rising.sum()),
            # a switch at row j was decided on the row before it
            "trigger_times": [float(cols["t"][j - 1]) for j in change],
            "regimes": regimes,
        }
        if s0 is not None:
            entry["max_abs_spacing_error"] = float(np.max(np.abs(spacing_error(cols, s0))))
        vehicles[str(vid)] = entry
    return {"vehicles": vehicles}
