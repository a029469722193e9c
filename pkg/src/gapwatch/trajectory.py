"""Lead-vehicle trajectory construction.

The human-driven leader is described only by an acceleration profile on a
uniform time grid. A trajectory is recovered by forward-Euler integration
from an assumed initial speed and position.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyProfile, InvalidRange, MalformedRow, NonMonotonicTime

# relative tolerance when deciding whether two grid spacings are equal
_GRID_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class AccelProfile:
    """Acceleration samples ``a`` (m/s^2) at times ``t`` (s), uniform spacing ``dt``."""

    t: np.ndarray
    a: np.ndarray
    dt: float

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        a = np.asarray(self.a, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "a", a)
        if t.ndim != 1 or t.shape != a.shape:
            raise ValueError("t and a must be 1-D arrays of equal length")
        if t.size == 0:
            raise EmptyProfile("acceleration profile has no samples")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(a))):
            raise ValueError("profile contains non-finite values")
        steps = np.diff(t)
        if np.any(steps <= 0):
            raise NonMonotonicTime("timestamps must be strictly increasing")
        if steps.size and not np.allclose(steps, self.dt, rtol=_GRID_RTOL, atol=1e-12):
            raise ValueError("timestamps are not uniformly spaced at dt")

    def __len__(self):
        return self.t.size

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "a"])
            for ti, ai in zip(self.t, self.a):
                writer.writerow([f"{ti:.9g}", f"{ai:.9g}"])


@dataclass(frozen=True, eq=False)
class LeadTrajectory:
    """Leader kinematics aligned to the simulation grid.

    ``a`` is the acceleration actually realized, i.e. the profile value after
    the standstill clamp has been applied.
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray

    def __len__(self):
        return self.t.size


def _parse_float(cell: str, lineno: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise MalformedRow(f"line {lineno}: non-numeric cell {cell!r}") from None
    if not math.isfinite(value):
        raise MalformedRow(f"line {lineno}: non-finite value {cell!r}")
    return value


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_accel_profile(path, expected_dt: float) -> AccelProfile:
    """Read a two-column ``t,a`` CSV and put it on a grid of spacing ``expected_dt``.

    A header row is recognised by a non-numeric first cell. Input that is
    already on the requested grid is returned unchanged; anything else is
    linearly interpolated onto ``t0, t0 + dt, ...`` up to the last timestamp.
    """
    if not expected_dt > 0:
        raise ValueError(f"expected_dt must be positive, got {expected_dt}")
    times, accels = [], []
    with open(Path(path), newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row]
            if not cells or all(c == "" for c in cells):
                continue
            if lineno == 1 and not _is_number(cells[0]):
                continue
            if len(cells) != 2:
                raise MalformedRow(f"line {lineno}: expected 2 columns, got {len(cells)}")
            times.append(_parse_float(cells[0], lineno))
            accels.append(_parse_float(cells[1], lineno))

    if not times:
        raise EmptyProfile(f"{path}: no data rows")
    t = np.array(times)
    a = np.array(accels)
    if np.any(np.diff(t) <= 0):
        raise NonMonotonicTime(f"{path}: timestamps must be strictly increasing")

    steps = np.diff(t)
    if steps.size == 0 or np.allclose(steps, expected_dt, rtol=_GRID_RTOL, atol=1e-12):
        return AccelProfile(t, a, expected_dt)

    n = int(math.floor((t[-1] - t[0]) / expected_dt + 1e-9)) + 1
    grid = t[0] + np.arange(n) * expected_dt
    return AccelProfile(grid, np.interp(grid, t, a), expected_dt)


def synth_oscillation_profile(v_low: float, v_high: float, a_mag: float,
                              n_cycles: int, dt: float) -> AccelProfile:
    """Square-wave acceleration that swings a vehicle between two speeds.

    Each cycle is an acceleration phase at ``+a_mag`` followed by an equally
    long deceleration phase at ``-a_mag``. The phase length is rounded to a
    whole number of steps, so starting from ``v_low`` the integrated speed
    returns exactly to ``v_low`` after every cycle and peaks within
    ``a_mag * dt`` of ``v_high``.
    """
    if not (0 <= v_low < v_high) or not a_mag > 0:
        raise InvalidRange(
            f"need 0 <= v_low < v_high and a_mag > 0 (got v_low={v_low}, "
            f"v_high={v_high}, a_mag={a_mag})")
    if n_cycles < 1:
        raise InvalidRange(f"n_cycles must be >= 1, got {n_cycles}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")

    n_phase = max(1, int(round((v_high - v_low) / a_mag / dt)))
    cycle = np.concatenate([np.full(n_phase, a_mag), np.full(n_phase, -a_mag)])
    a = np.tile(cycle, int(n_cycles))
    return AccelProfile(np.arange(a.size) * dt, a, dt)


def integrate_lead(profile: AccelProfile, v0: float, x0: float) -> LeadTrajectory:
    """Forward-Euler trajectory from an acceleration profile.

    ``v[k+1] = max(0, v[k] + a[k]*dt)`` and ``x[k+1] = x[k] + v[k]*dt``.
    """
    if v0 < 0:
        raise ValueError(f"initial speed must be non-negative, got {v0}")
    dt = profile.dt
    n = len(profile)
    x = np.empty(n)
    v = np.empty(n)
    a = np.array(profile.a, dtype=float)
    x[0], v[0] = x0, v0
    for k in range(n - 1):
        v_next = v[k] + a[k] * dt
        if v_next < 0.0:
            v_next = 0.0
            a[k] = -v[k] / dt
        v[k + 1] = v_next
        x[k + 1] = x[k] + v[k] * dt
    if v[-1] + a[-1] * dt < 0.0:
        a[-1] = -v[-1] / dt
    return LeadTrajectory(np.array(profile.t, dtype=float), x, v, a)


def fit_to_grid(profile: AccelProfile, n_samples: int) -> AccelProfile:
    """Truncate, or extend with zero acceleration, to exactly ``n_samples``.

    Extension holds the leader at whatever speed it reached.
    """
    a = profile.a[:n_samples]
    if a.size < n_samples:
        a = np.concatenate([a, np.zeros(n_samples - a.size)])
    return AccelProfile(profile.t[0] + np.arange(n_samples) * profile.dt, a, profile.dt)
