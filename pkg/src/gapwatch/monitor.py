"""Shewhart chart for the estimated time gap and the retune trigger."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

ABOVE = "above"
BELOW = "below"


@dataclass(frozen=True)
class ChartSpec:
    """Baseline ``N(mu_desired, sigma_desired)`` and limit multiplier ``L``.

    ``sigma_desired`` is a standard deviation.
    """

    mu_desired: float = 1.6
    sigma_desired: float = 0.125
    L: float = 2.0

    def __post_init__(self):
        if not self.sigma_desired > 0:
            raise ValueError(f"sigma_desired must be positive, got {self.sigma_desired}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")


@dataclass(frozen=True)
class ChartLimits:
    lcl: float
    cl: float
    ucl: float


@dataclass(frozen=True)
class ViolationEvent:
    t: float
    vehicle_id: int
    value: float
    side: str
    limits: ChartLimits


@dataclass(frozen=True)
class TriggerRule:
    """Fire when ``k_violations`` excursions fall inside a sliding ``window`` (s)."""

    k_violations: int = 3
    window: float = 35.0

    def __post_init__(self):
        if self.k_violations < 1:
            raise ValueError("k_violations must be >= 1")
        if not self.window > 0:
            raise ValueError("window must be positive")


def compute_limits(spec: ChartSpec) -> ChartLimits:
    half = spec.L * spec.sigma_desired
    return ChartLimits(spec.mu_desired - half, spec.mu_desired, spec.mu_desired + half)


def check_point(value: float, limits: ChartLimits, t: float,
                vehicle_id: int) -> Optional[ViolationEvent]:
    """Return an event if ``value`` is strictly outside ``[lcl, ucl]``."""
    if value > limits.ucl:
        return ViolationEvent(t, vehicle_id, value, ABOVE, limits)
    if value < limits.lcl:
        return ViolationEvent(t, vehicle_id, value, BELOW, limits)
    return None


def should_trigger(history, rule: TriggerRule, now: float) -> bool:
    """True iff at least ``rule.k_violations`` events have ``now - window < t <= now``."""
    lo = now - rule.window
    recent = sum(1 for ev in history if lo < ev.t <= now)
    return recent >= rule.k_violations


def retune(current: ChartSpec, new_tau: float) -> ChartSpec:
    if not new_tau > 0:
        raise ValueError(f"new time gap must be positive, got {new_tau}")
    return replace(current, mu_desired=new_tau)


@dataclass
class ChartState:
    """Per-vehicle chart bookkeeping.

    Consecutive out-of-control samples form one excursion and yield a single
    event on entry. ``pending`` holds the events that still count toward the
    trigger; it is cleared whenever the chart is retuned.
    """

    spec: ChartSpec
    in_excursion: bool = False
    events: list = field(default_factory=list)
    pending: list = field(default_factory=list)
    retunes: int = 0

    def __post_init__(self):
        self.limits = compute_limits(self.spec)

    def observe(self, value: float, t: float, vehicle_id: int):
        """Chart one sample. Returns ``(out_of_control, new_event_or_None)``."""
        hit = check_point(value, self.limits, t, vehicle_id)
        if hit is None:
            self.in_excursion = False
            return False, None
        if self.in_excursion:
            return True, None
        self.in_excursion = True
        self.events.append(hit)
        self.pending.append(hit)
        return True, hit

    def retune(self, new_tau: float) -> None:
        self.spec = retune(self.spec, new_tau)
        self.limits = compute_limits(self.spec)
        self.in_excursion = False
        self.pending.clear()
        self.retunes += 1
